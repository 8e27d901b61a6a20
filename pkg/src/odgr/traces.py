"""Actor observation traces and their partial-observability degradations."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator

import numpy as np

from .gridworld import Action, Cell, GridSpec, transition
from .qlearn import QTable, greedy_rollout


class TraceError(ValueError):
    """Malformed or unusable observation trace. ``line`` is set for file input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Observation:
    state: Cell
    action: Action
    step: int


@dataclass(frozen=True)
class ObservationTrace:
    observations: tuple[Observation, ...]
    source_spec: str
    observability: float = 1.0
    true_goal: Cell | None = None
    truncated: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        obs = tuple(self.observations)
        object.__setattr__(self, "observations", obs)
        steps = [o.step for o in obs]
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise TraceError("observations must be in strictly increasing step order")
        if not 0 < self.observability <= 1:
            raise TraceError(f"observability must be in (0, 1], got {self.observability}")

    def __len__(self) -> int:
        return len(self.observations)

    def __iter__(self) -> Iterator[Observation]:
        return iter(self.observations)

    def check_consistent(self, spec: GridSpec) -> bool:
        """True when consecutive full-trace observations follow the grid dynamics."""
        for prev, cur in zip(self.observations, self.observations[1:]):
            if cur.step == prev.step + 1 and transition(spec, prev.state, prev.action) != cur.state:
                return False
        return True

    def to_dict(self) -> dict:
        doc = {
            "source_spec": self.source_spec,
            "observability": self.observability,
            "truncated": self.truncated,
            "observations": [
                {"step": o.step, "state": list(o.state), "action": int(o.action)} for o in self.observations
            ],
        }
        if self.true_goal is not None:
            doc["true_goal"] = list(self.true_goal)
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "ObservationTrace":
        try:
            obs = tuple(_parse_obs(o) for o in doc["observations"])
            goal = doc.get("true_goal")
            return cls(
                obs,
                doc["source_spec"],
                float(doc.get("observability", 1.0)),
                tuple(goal) if goal is not None else None,
                bool(doc.get("truncated", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, TraceError):
                raise
            raise TraceError(f"bad trace document: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "ObservationTrace":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise TraceError(exc.msg, exc.lineno) from exc
        return cls.from_dict(doc)

    def to_lines(self) -> str:
        """Line-oriented form: a header object, then one observation per line."""
        header = {k: v for k, v in self.to_dict().items() if k != "observations"}
        lines = [json.dumps(header)]
        lines += [json.dumps({"step": o.step, "state": list(o.state), "action": int(o.action)}) for o in self]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "ObservationTrace":
        header = None
        obs = []
        for lineno, raw in enumerate(lines, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                doc = json.loads(raw)
                if header is None and "source_spec" in doc:
                    header = doc
                    continue
                obs.append(_parse_obs(doc))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise TraceError(f"cannot parse observation: {exc}", lineno) from exc
        if header is None:
            raise TraceError("missing header line with source_spec")
        goal = header.get("true_goal")
        return cls(
            tuple(obs),
            header["source_spec"],
            float(header.get("observability", 1.0)),
            tuple(goal) if goal is not None else None,
            bool(header.get("truncated", False)),
        )


def _parse_obs(doc: dict) -> Observation:
    x, y = doc["state"]
    return Observation((int(x), int(y)), Action(int(doc["action"])), int(doc["step"]))


def generate_trace(
    spec: GridSpec,
    actor_q: QTable,
    start: Cell,
    goal: Cell,
    seed: int = 0,
    policy: str = "greedy",
    max_steps: int | None = None,
) -> ObservationTrace:
    """Full trace of an actor following ``actor_q`` from ``start`` to ``goal``."""
    if tuple(start) == tuple(goal):
        raise TraceError("start and goal coincide; the trace would be empty")
    max_steps = max_steps or 4 * spec.n_states
    roll = greedy_rollout(spec, actor_q, start, goal, max_steps=max_steps, seed=seed, policy=policy)
    obs = tuple(Observation(s, a, i) for i, (s, a) in enumerate(roll.steps))
    return ObservationTrace(obs, spec.ident, 1.0, tuple(goal), roll.truncated)


def subsample(trace: ObservationTrace, fraction: float, mode: str = "random", seed: int = 0) -> ObservationTrace:
    """Keep ``ceil(fraction * len(trace))`` observations.

    ``mode="random"`` picks them uniformly without replacement, keeping order
    and step indices; ``mode="prefix"`` keeps the first ones.
    """
    if len(trace) == 0:
        raise TraceError("cannot subsample an empty trace")
    if not 0 < fraction <= 1:
        raise TraceError(f"fraction must be in (0, 1], got {fraction}")
    n = len(trace)
    # round before ceil so 0.3 * 10 keeps 3, not 4
    k = min(n, math.ceil(round(fraction * n, 9)))
    if mode == "random":
        keep = np.sort(np.random.default_rng(seed).choice(n, size=k, replace=False))
    elif mode == "prefix":
        keep = np.arange(k)
    else:
        raise TraceError(f"unknown subsample mode {mode!r}")
    obs = tuple(trace.observations[i] for i in keep)
    return replace(trace, observations=obs, observability=fraction * trace.observability)
