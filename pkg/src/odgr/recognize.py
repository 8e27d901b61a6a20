"""Goal recognition by divergence between observed behavior and goal policies."""
from __future__ import annotations

import time
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .gridworld import N_ACTIONS, Cell
from .qlearn import QTable, policy_from_row
from .traces import ObservationTrace, TraceError
from .transfer import GoalLibrary

DEFAULT_SMOOTHING = 1e-8


@dataclass(frozen=True)
class RecognizerConfig:
    smoothing: float = DEFAULT_SMOOTHING
    policy: str = "ratio"  # "ratio" or "softmax"
    temperature: float = 1.0
    absorbing_goal: bool = True

    def __post_init__(self):
        if self.smoothing <= 0 or self.smoothing * N_ACTIONS >= 1:
            raise ValueError(f"smoothing must be in (0, 1/{N_ACTIONS}), got {self.smoothing}")
        if self.policy not in ("ratio", "softmax"):
            raise ValueError(f"unknown policy kind {self.policy!r}")


@dataclass
class RecognitionResult:
    scores: dict[Cell, float]
    predicted: Cell
    trace_len: int
    elapsed: float

    def to_dict(self) -> dict:
        return {
            "predicted": list(self.predicted),
            "trace_len": self.trace_len,
            "elapsed_us": round(self.elapsed * 1e6, 3),
            "scores": [{"goal": list(g), "score": s} for g, s in self.scores.items()],
        }


def pseudo_policy(trace: ObservationTrace, smoothing: float = DEFAULT_SMOOTHING) -> dict[Cell, np.ndarray]:
    """Smoothed empirical action distribution at every observed state."""
    if len(trace) == 0:
        raise TraceError("cannot build a pseudo-policy from an empty trace")
    if smoothing <= 0:
        raise ValueError("smoothing must be positive")
    counts: dict[Cell, np.ndarray] = defaultdict(lambda: np.zeros(N_ACTIONS))
    for o in trace:
        counts[o.state][int(o.action)] += 1
    out = {}
    for s, c in counts.items():
        p = c / c.sum()
        out[s] = p * (1 - N_ACTIONS * smoothing) + smoothing
    return out


def smooth(p: np.ndarray, smoothing: float) -> np.ndarray:
    """Floor every entry at ``smoothing`` and renormalize."""
    p = np.maximum(p, smoothing)
    return p / p.sum()


def kl(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def kl_distance(
    q: QTable,
    pseudo: dict[Cell, np.ndarray],
    smoothing: float = DEFAULT_SMOOTHING,
    policy: str = "ratio",
    temperature: float = 1.0,
    absorbing_goal: bool = True,
) -> float:
    """Sum over observed states of ``KL(pseudo(.|s) || smoothed goal policy(.|s))``.

    With ``absorbing_goal`` the candidate's own goal cell is terminal: an actor
    pursuing it stops there, so each of the four moves only gets the
    ``smoothing`` floor and the remaining mass sits on "episode over".
    """
    if not pseudo:
        raise TraceError("empty pseudo-policy")
    total = 0.0
    for s, p in pseudo.items():
        if absorbing_goal and tuple(s) == q.goal:
            total += kl(p, np.full(N_ACTIONS, smoothing))
            continue
        pi = smooth(policy_from_row(q.row(s), policy, temperature), smoothing)
        total += kl(p, pi)
    # clamp the rounding residue of KL(p || p) at zero
    return max(total, 0.0)


def infer(library: GoalLibrary, trace: ObservationTrace, cfg: RecognizerConfig = RecognizerConfig()) -> RecognitionResult:
    """Score every library goal against ``trace`` and return the minimizer.

    Exact ties go to the goal listed first in the library.
    """
    if len(library) == 0:
        raise ValueError("goal library is empty")
    t0 = time.perf_counter()
    pseudo = pseudo_policy(trace, cfg.smoothing)
    scores = {}
    best, best_score = None, np.inf
    for g, q in zip(library.goals, library.qtables):
        m = kl_distance(q, pseudo, cfg.smoothing, cfg.policy, cfg.temperature, cfg.absorbing_goal)
        scores[g] = m
        if m < best_score:
            best, best_score = g, m
    elapsed = time.perf_counter() - t0
    return RecognitionResult(scores, best, len(trace), elapsed)
