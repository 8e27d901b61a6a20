"""Tabular Q-learning per goal, a value-iteration oracle, and Q-derived policies."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .gridworld import N_ACTIONS, Action, Cell, GridSpec

# Total Q-updates performed by `train` in this process. The harness reads it
# to prove that inference never learns.
UPDATE_COUNTER = {"updates": 0}


class ContractError(ValueError):
    """Raised when a Q-table violates the preconditions of an operation."""


@dataclass(frozen=True)
class QTable:
    values: np.ndarray
    spec: GridSpec = field(repr=False)
    goal: Cell
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.spec.n_states, N_ACTIONS):
            raise ContractError(
                f"Q-table shape {values.shape} does not match grid ({self.spec.n_states}, {N_ACTIONS})"
            )
        if not np.all(np.isfinite(values)):
            raise ContractError("Q-table contains non-finite values")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "goal", tuple(int(v) for v in self.goal))

    @property
    def spec_ref(self) -> str:
        return self.spec.ident

    def row(self, s: Cell) -> np.ndarray:
        return self.values[self.spec.index[tuple(s)]]

    def scaled(self, c: float) -> "QTable":
        return QTable(self.values * c, self.spec, self.goal, dict(self.provenance))

    def to_dict(self) -> dict:
        doc = {
            "spec": self.spec_ref,
            "goal": list(self.goal),
            "n_states": self.spec.n_states,
            "n_actions": N_ACTIONS,
            "values": [float(v) for v in self.values.ravel()],
        }
        if self.provenance:
            doc["provenance"] = self.provenance
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict, spec: GridSpec) -> "QTable":
        if doc["spec"] != spec.ident:
            raise ContractError(f"Q-table was trained on {doc['spec']}, not {spec.ident}")
        values = np.array(doc["values"], dtype=float).reshape(spec.n_states, N_ACTIONS)
        return cls(values, spec, tuple(doc["goal"]), doc.get("provenance", {}))

    @classmethod
    def from_json(cls, text: str, spec: GridSpec) -> "QTable":
        return cls.from_dict(json.loads(text), spec)


@dataclass(frozen=True)
class TrainConfig:
    alpha: float = 0.1
    gamma: float = 0.99
    episodes: int = 200_000
    explore_epsilon: float = 0.1
    explore_epsilon_final: float = 0.01
    max_steps_per_episode: int = 100
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        for name in ("explore_epsilon", "explore_epsilon_final"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.episodes < 0 or self.max_steps_per_episode < 1:
            raise ValueError("episodes must be >= 0 and max_steps_per_episode >= 1")


@njit(cache=True, nogil=True)
def _argmax_random(row, tol):
    best = row.max()
    n_best = 0
    for a in range(row.shape[0]):
        if row[a] >= best - tol:
            n_best += 1
    pick = np.random.randint(n_best)
    for a in range(row.shape[0]):
        if row[a] >= best - tol:
            if pick == 0:
                return a
            pick -= 1
    return 0


@njit(cache=True, nogil=True)
def _q_learning(q, next_state, goal, starts, alpha, gamma, episodes, eps0, eps1, max_steps, seed):
    np.random.seed(seed)
    n_actions = q.shape[1]
    updates = 0
    denom = max(episodes - 1, 1)
    for ep in range(episodes):
        eps = eps0 + (eps1 - eps0) * ep / denom
        s = starts[np.random.randint(starts.shape[0])]
        for _ in range(max_steps):
            if np.random.random() < eps:
                a = np.random.randint(n_actions)
            else:
                a = _argmax_random(q[s], 0.0)
            s2 = next_state[s, a]
            if s2 == goal:
                target = 1.0
            else:
                target = gamma * q[s2].max()
            q[s, a] += alpha * (target - q[s, a])
            updates += 1
            s = s2
            if s == goal:
                break
    return updates


def train(spec: GridSpec, goal: Cell, cfg: TrainConfig = TrainConfig()) -> QTable:
    """Epsilon-greedy tabular Q-learning toward ``goal``.

    Episodes start from a uniformly drawn free cell other than the goal and
    end on goal entry or after ``max_steps_per_episode``. The exploration rate
    decays linearly from ``explore_epsilon`` to ``explore_epsilon_final``.
    """
    goal = spec.check_cell(goal, "goal")
    g = spec.index[goal]
    q = np.zeros((spec.n_states, N_ACTIONS))
    starts = np.array([i for i in range(spec.n_states) if i != g], dtype=np.int64)
    updates = _q_learning(
        q,
        np.ascontiguousarray(spec.next_state),
        g,
        starts,
        float(cfg.alpha),
        float(cfg.gamma),
        int(cfg.episodes),
        float(cfg.explore_epsilon),
        float(cfg.explore_epsilon_final),
        int(cfg.max_steps_per_episode),
        int(cfg.seed) % (2**32),
    )
    UPDATE_COUNTER["updates"] += int(updates)
    return QTable(q, spec, goal, {"method": "q-learning", "episodes": cfg.episodes, "seed": cfg.seed})


def warmup() -> None:
    """Compile the training kernel so later timings exclude JIT cost."""
    from .gridworld import make_empty

    spec = make_empty(4)
    q = np.zeros((spec.n_states, N_ACTIONS))
    _q_learning(q, np.ascontiguousarray(spec.next_state), 0, np.arange(1, spec.n_states), 0.1, 0.9, 1, 0.1, 0.1, 2, 0)


def value_iteration(spec: GridSpec, goal: Cell, gamma: float = 0.99, tol: float = 1e-12) -> QTable:
    """Optimal Q by synchronous Bellman backups; the goal row stays at zero."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    goal = spec.check_cell(goal, "goal")
    g = spec.index[goal]
    nxt = spec.next_state
    enters = nxt == g
    r = enters.astype(float)
    cont = (~enters).astype(float)
    q = np.zeros((spec.n_states, N_ACTIONS))
    while True:
        new = r + gamma * cont * q.max(axis=1)[nxt]
        new[g] = 0.0
        delta = np.abs(new - q).max()
        q = new
        if delta < tol:
            break
    return QTable(q, spec, goal, {"method": "value-iteration", "gamma": gamma})


def greedy_actions(row: np.ndarray, rtol: float = 1e-12) -> set[int]:
    best = row.max()
    return {int(a) for a in np.flatnonzero(row >= best - rtol * max(abs(best), 1e-300))}


def policy_from_q(q: QTable, s: Cell, kind: str = "ratio", temperature: float = 1.0) -> np.ndarray:
    """Action distribution at ``s``.

    ``kind="ratio"`` normalizes the Q row directly, ``Q(s,a) / sum_a' Q(s,a')``;
    an all-zero row maps to the uniform distribution. ``kind="softmax"`` uses
    ``exp(Q / temperature)`` instead.
    """
    return policy_from_row(q.row(s), kind, temperature)


def policy_from_row(row: np.ndarray, kind: str = "ratio", temperature: float = 1.0) -> np.ndarray:
    row = np.asarray(row, dtype=float)
    if kind == "ratio":
        if np.any(row < 0):
            raise ContractError(f"negative Q-value in {row.tolist()}; ratio policy is undefined")
        total = row.sum()
        if total == 0:
            return np.full(row.shape, 1.0 / row.size)
        return row / total
    if kind == "softmax":
        if temperature <= 0:
            raise ValueError("temperature must be positive")
        z = (row - row.max()) / temperature
        e = np.exp(z)
        return e / e.sum()
    raise ValueError(f"unknown policy kind {kind!r}")


@dataclass
class Rollout:
    steps: list[tuple[Cell, Action]]
    truncated: bool


def greedy_rollout(
    spec: GridSpec,
    q: QTable,
    start: Cell,
    goal: Cell,
    max_steps: int = 200,
    seed: int = 0,
    policy: str = "greedy",
) -> Rollout:
    """Follow argmax-Q actions (ties broken at random) from ``start`` until ``goal``.

    With ``policy="softmax"`` actions are sampled from the ratio policy instead.
    The step entering the goal is included.
    """
    start = spec.check_cell(start, "start")
    goal = spec.check_cell(goal, "goal")
    rng = np.random.default_rng(seed)
    nxt = spec.next_state
    s = spec.index[start]
    g = spec.index[goal]
    steps: list[tuple[Cell, Action]] = []
    while s != g and len(steps) < max_steps:
        row = q.values[s]
        if policy == "greedy":
            a = int(rng.choice(sorted(greedy_actions(row))))
        elif policy == "softmax":
            a = int(rng.choice(N_ACTIONS, p=policy_from_row(row)))
        else:
            raise ValueError(f"unknown actor policy {policy!r}")
        steps.append((spec.states[s], Action(a)))
        s = int(nxt[s, a])
    return Rollout(steps, truncated=s != g)

