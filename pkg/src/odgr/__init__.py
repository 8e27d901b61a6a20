"""Online dynamic goal recognition in gridworlds.

Base goals get Q-tables by tabular Q-learning; goals that arrive later get
Q-tables by weighted aggregation of the base tables; observed traces are
matched to goals by KL divergence.
"""
from .gridworld import Action, GridError, GridSpec, make_empty, make_simple_crossing
from .harness import Scenario, compare, load_scenario, run_scenario
from .metrics import EvalEpisode, EvalReport, evaluate
from .qlearn import QTable, TrainConfig, train, value_iteration
from .recognize import RecognizerConfig, infer
from .traces import Observation, ObservationTrace, TraceError, generate_trace, subsample
from .transfer import Aggregation, GoalLibrary, TransferOptions, WeightScheme, adapt_goals, transfer

__version__ = "0.1.0"
