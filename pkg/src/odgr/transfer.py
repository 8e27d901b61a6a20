"""Synthesizing Q-tables for unseen goals from base-goal Q-tables.

Weights are either static (Euclidean distance between goals, one weight per
base goal) or dynamic (cosine similarity between the displacement vectors
``s -> g_base`` and ``s -> g_dynamic``, recomputed per state). The weighted
tables are then combined with one of three aggregation rules.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .gridworld import Cell, GridSpec
from .qlearn import QTable

ZERO_SUM_TOL = 1e-12


class WeightScheme(str, Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


class Aggregation(str, Enum):
    NORMALIZE = "normalize"
    SOFTMAX_WEIGHTS = "softmax"
    MAX = "max"


@dataclass(frozen=True)
class TransferOptions:
    weight_scheme: WeightScheme = WeightScheme.DYNAMIC
    aggregation: Aggregation = Aggregation.SOFTMAX_WEIGHTS
    scaling_enabled: bool = False
    scaling_temperature: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "weight_scheme", WeightScheme(self.weight_scheme))
        object.__setattr__(self, "aggregation", Aggregation(self.aggregation))
        if self.scaling_temperature <= 0:
            raise ValueError("scaling_temperature must be positive")

    def to_dict(self) -> dict:
        return {
            "weight_scheme": self.weight_scheme.value,
            "aggregation": self.aggregation.value,
            "scaling_enabled": self.scaling_enabled,
            "scaling_temperature": self.scaling_temperature,
        }


@dataclass
class GoalLibrary:
    spec: GridSpec
    goals: list[Cell]
    qtables: list[QTable]
    # per-goal count of states where Normalize fell back to uniform weights
    diagnostics: dict = field(default_factory=dict)
    elapsed: float = 0.0

    def __post_init__(self):
        self.goals = [tuple(g) for g in self.goals]
        if len(set(self.goals)) != len(self.goals):
            raise ValueError("library goals must be distinct")
        if len(self.goals) != len(self.qtables):
            raise ValueError("one Q-table per goal is required")
        for g, q in zip(self.goals, self.qtables):
            if q.goal != g:
                raise ValueError(f"Q-table for {q.goal} listed under goal {g}")
            if q.spec_ref != self.spec.ident:
                raise ValueError(f"Q-table for {g} belongs to grid {q.spec_ref}")

    def __len__(self) -> int:
        return len(self.goals)

    def table(self, goal: Cell) -> QTable:
        return self.qtables[self.goals.index(tuple(goal))]


def static_weights(base_goals: Sequence[Cell], g_d: Cell) -> np.ndarray:
    """``1 / (1 + ||g_b - g_d||)`` for each base goal."""
    if len(base_goals) == 0:
        raise ValueError("need at least one base goal")
    b = np.asarray(base_goals, dtype=float)
    d = np.linalg.norm(b - np.asarray(g_d, dtype=float), axis=1)
    return 1.0 / (1.0 + d)


def cosine_similarity(s, g_b, g_d) -> float:
    """Cosine of the angle between ``g_b - s`` and ``g_d - s``; 0 if either is zero."""
    u = np.asarray(g_b, dtype=float) - np.asarray(s, dtype=float)
    v = np.asarray(g_d, dtype=float) - np.asarray(s, dtype=float)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def dynamic_weights(s: Cell, base_goals: Sequence[Cell], g_d: Cell) -> np.ndarray:
    if len(base_goals) == 0:
        raise ValueError("need at least one base goal")
    return np.array([cosine_similarity(s, gb, g_d) for gb in base_goals])


def dynamic_weight_matrix(coords: np.ndarray, base_goals: Sequence[Cell], g_d: Cell) -> np.ndarray:
    """Vectorized ``dynamic_weights`` for every row of ``coords``; shape ``(n_states, n_base)``."""
    u = np.asarray(base_goals, dtype=float)[None, :, :] - coords[:, None, :]
    v = (np.asarray(g_d, dtype=float) - coords)[:, None, :]
    nu = np.linalg.norm(u, axis=2)
    nv = np.linalg.norm(v, axis=2)
    denom = nu * nv
    dots = (u * v).sum(axis=2)
    out = np.zeros_like(dots)
    np.divide(dots, denom, out=out, where=denom > 0)
    return np.clip(out, -1.0, 1.0)


@dataclass
class Aggregated:
    qtable: QTable
    fallbacks: int = 0


def aggregate(
    qtables: Sequence[QTable],
    weights_at: Callable[[Cell], np.ndarray] | np.ndarray,
    method: Aggregation | str,
    goal: Cell | None = None,
) -> Aggregated:
    """Combine base Q-tables state by state.

    ``weights_at`` is either a callable ``state -> weights`` or a precomputed
    ``(n_states, n_tables)`` array. Normalize divides by the weight sum and
    falls back to uniform weights where that sum is within 1e-12 of zero;
    the number of such states is reported as ``fallbacks``. Max ignores the
    weights.
    """
    if len(qtables) == 0:
        raise ValueError("need at least one Q-table")
    method = Aggregation(method)
    spec = qtables[0].spec
    if any(q.spec_ref != spec.ident for q in qtables):
        raise ValueError("all Q-tables must share one grid")
    stack = np.stack([q.values for q in qtables])  # (k, S, A)
    k = stack.shape[0]

    if callable(weights_at):
        w = np.array([np.asarray(weights_at(s), dtype=float) for s in spec.states])
    else:
        w = np.asarray(weights_at, dtype=float)
    if w.shape != (spec.n_states, k):
        raise ValueError(f"weights have shape {w.shape}, expected {(spec.n_states, k)}")

    fallbacks = 0
    if method is Aggregation.MAX:
        values = stack.max(axis=0)
    else:
        if method is Aggregation.SOFTMAX_WEIGHTS:
            w = np.exp(w)
        total = w.sum(axis=1)
        bad = np.abs(total) <= ZERO_SUM_TOL
        if bad.any():
            fallbacks = int(bad.sum())
            w = w.copy()
            w[bad] = 1.0
            total = w.sum(axis=1)
        values = np.einsum("sk,ksa->sa", w, stack) / total[:, None]

    goal = tuple(goal) if goal is not None else qtables[0].goal
    return Aggregated(QTable(values, spec, goal), fallbacks)


def scale_qtable(q: QTable, temperature: float) -> QTable:
    """Sharpen each state's row toward its top action(s).

    ``Q'(s,a) = m * (Q(s,a)/m) ** (1/temperature)`` with ``m = max_a Q(s,a)``;
    rows with ``m <= 0`` are left alone. Temperature 1 is the identity and the
    maxima are untouched, so ties at the top survive.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    v = q.values
    m = v.max(axis=1, keepdims=True)
    pos = (m > 0).ravel()
    out = v.copy()
    with np.errstate(over="ignore", divide="ignore"):
        ratio = v[pos] / m[pos]
        sharp = m[pos] * np.sign(ratio) * np.abs(ratio) ** (1.0 / temperature)
    big = np.finfo(float).max
    out[pos] = np.clip(sharp, -big, big)
    # rounding must not lift a lower action onto the maximum
    below = np.nextafter(m, -np.inf)
    lower = v < m
    out[lower] = np.minimum(out, below)[lower]
    # keep the maxima bit-identical
    out[v == m] = v[v == m]
    return QTable(out, q.spec, q.goal, dict(q.provenance))


def transfer(base: GoalLibrary, g_d: Cell, opts: TransferOptions) -> Aggregated:
    spec = base.spec
    if opts.weight_scheme is WeightScheme.STATIC:
        w = np.broadcast_to(static_weights(base.goals, g_d), (spec.n_states, len(base)))
    else:
        w = dynamic_weight_matrix(spec.coords, base.goals, g_d)
    agg = aggregate(base.qtables, w, opts.aggregation, goal=g_d)
    q = agg.qtable
    if opts.scaling_enabled:
        q = scale_qtable(q, opts.scaling_temperature)
    provenance = dict(opts.to_dict(), base_goals=[list(g) for g in base.goals], method="transfer")
    return Aggregated(QTable(q.values, spec, g_d, provenance), agg.fallbacks)


def adapt_goals(base: GoalLibrary, dynamic_goals: Sequence[Cell], opts: TransferOptions = TransferOptions()) -> GoalLibrary:
    """Build a library for ``dynamic_goals`` by transfer from ``base``.

    The wall-clock duration is stored on the result as ``elapsed``.
    """
    t0 = time.perf_counter()
    goals = [base.spec.check_cell(g, "dynamic goal") for g in dynamic_goals]
    tables, diagnostics = [], {}
    for g in goals:
        agg = transfer(base, g, opts)
        tables.append(agg.qtable)
        diagnostics[g] = agg.fallbacks
    elapsed = time.perf_counter() - t0
    return GoalLibrary(base.spec, goals, tables, diagnostics, elapsed)

