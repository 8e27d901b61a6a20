"""Deterministic 2D navigation MDP.

Cells are ``(x, y)`` tuples. The grid carries an implicit one-cell border,
so a ``make_empty(8)`` grid has playable coordinates 1..6 on both axes, the
same convention MiniGrid uses. ``Up`` decreases ``y`` (screen orientation).
"""
from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from typing import Iterable

import numpy as np

Cell = tuple[int, int]


class GridError(ValueError):
    """Invalid grid construction or an invalid cell for a given grid."""


class Action(IntEnum):
    UP = 0
    RIGHT = 1
    DOWN = 2
    LEFT = 3


N_ACTIONS = len(Action)

# (dx, dy) per action, indexed by Action value
MOVES = np.array([(0, -1), (1, 0), (0, 1), (-1, 0)], dtype=np.int64)


def opposite(a: Action) -> Action:
    return Action((int(a) + 2) % N_ACTIONS)


@dataclass(frozen=True)
class GridSpec:
    width: int
    height: int
    walls: frozenset = field(default_factory=frozenset)
    name: str = "grid"

    def __post_init__(self):
        if self.width < 3 or self.height < 3:
            raise GridError(f"grid {self.width}x{self.height} has no playable interior")
        walls = frozenset((int(x), int(y)) for x, y in self.walls)
        object.__setattr__(self, "walls", walls)
        for x, y in walls:
            if not (1 <= x < self.width - 1 and 1 <= y < self.height - 1):
                raise GridError(f"wall {(x, y)} lies outside the playable interior")
        if len(self.states) < 2:
            raise GridError("grid needs at least two free cells")
        if not self._connected():
            raise GridError(f"free cells of {self.name!r} are not connected")

    @cached_property
    def states(self) -> tuple[Cell, ...]:
        """Free cells in row-major order (``y`` outer, ``x`` inner)."""
        return tuple(
            (x, y)
            for y in range(1, self.height - 1)
            for x in range(1, self.width - 1)
            if (x, y) not in self.walls
        )

    @cached_property
    def index(self) -> dict[Cell, int]:
        return {s: i for i, s in enumerate(self.states)}

    @property
    def n_states(self) -> int:
        return len(self.states)

    @cached_property
    def ident(self) -> str:
        digest = hashlib.sha1(
            json.dumps(sorted(self.walls)).encode() + f"{self.width}x{self.height}".encode()
        ).hexdigest()[:10]
        return f"{self.name}-{self.width}x{self.height}-{digest}"

    @cached_property
    def next_state(self) -> np.ndarray:
        """``next_state[i, a]`` is the index reached from state ``i`` under action ``a``."""
        table = np.empty((self.n_states, N_ACTIONS), dtype=np.int64)
        for i, s in enumerate(self.states):
            for a in Action:
                table[i, a] = self.index[transition(self, s, a)]
        table.setflags(write=False)
        return table

    @cached_property
    def coords(self) -> np.ndarray:
        """``(n_states, 2)`` float array of cell coordinates, aligned with ``states``."""
        arr = np.array(self.states, dtype=float)
        arr.setflags(write=False)
        return arr

    def is_free(self, s: Cell) -> bool:
        x, y = s
        return 1 <= x < self.width - 1 and 1 <= y < self.height - 1 and (x, y) not in self.walls

    def check_cell(self, s: Iterable[int], what: str = "cell") -> Cell:
        cell = tuple(int(v) for v in s)
        if len(cell) != 2 or not self.is_free(cell):
            raise GridError(f"{what} {cell} is not a free cell of {self.name!r}")
        return cell

    def _connected(self) -> bool:
        free = set(self.states)
        start = self.states[0]
        seen = {start}
        queue = deque([start])
        while queue:
            x, y = queue.popleft()
            for dx, dy in MOVES:
                nxt = (x + int(dx), y + int(dy))
                if nxt in free and nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return len(seen) == len(free)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "width": self.width,
            "height": self.height,
            "walls": [list(w) for w in sorted(self.walls)],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GridSpec":
        try:
            width, height = int(doc["width"]), int(doc["height"])
            walls = frozenset((int(w[0]), int(w[1])) for w in doc.get("walls", []))
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise GridError(f"malformed grid document: {exc!r}") from exc
        return cls(width=width, height=height, walls=walls, name=doc.get("name", "grid"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "GridSpec":
        return cls.from_dict(json.loads(text))


def make_empty(n: int) -> GridSpec:
    """Open ``n``x``n`` room (border included), playable cells ``1..n-2``."""
    if n < 4:
        raise GridError(f"invalid size {n}: an empty grid needs n >= 4 for two playable cells")
    return GridSpec(n, n, frozenset(), name=f"empty{n}")


def make_simple_crossing(n: int, seed: int = 0) -> GridSpec:
    """Room with two perpendicular walls, each pierced by a single gap.

    One wall spans the full playable interior. The second, perpendicular
    wall runs from the border to the first wall on one side, forming a T
    junction; two crossing full-length walls with one gap each would leave
    one quadrant unreachable. Wall lines sit on even coordinates, as in
    MiniGrid's crossing environments, so the four corner cells stay free.
    """
    if n < 5:
        raise GridError(f"invalid size {n}: crossing grid needs n >= 5")
    rng = np.random.default_rng(seed)
    lines = list(range(2, n - 2, 2))
    lo, hi = 1, n - 2  # playable range, inclusive
    p = int(rng.choice(lines))  # full wall position
    q = int(rng.choice(lines))  # partial wall position
    sides = [range(lo, p), range(p + 1, hi + 1)]
    # the partial wall needs at least one solid cell besides its gap
    usable = [sp for sp in sides if len(sp) >= 2] or [max(sides, key=len)]
    span = usable[int(rng.integers(len(usable)))]

    full = [(p, y) for y in range(lo, hi + 1)]
    partial = [(x, q) for x in span]
    full_gap_choices = [c for c in full if c[1] != q]
    full_gap = full_gap_choices[int(rng.integers(len(full_gap_choices)))]
    partial_gap = partial[int(rng.integers(len(partial)))]

    if rng.integers(2):  # transpose: the full wall becomes horizontal
        full = [(y, x) for x, y in full]
        partial = [(y, x) for x, y in partial]
        full_gap = full_gap[::-1]
        partial_gap = partial_gap[::-1]

    walls = (set(full) | set(partial)) - {full_gap, partial_gap}
    try:
        return GridSpec(n, n, frozenset(walls), name=f"crossing{n}s{seed}")
    except GridError as exc:  # pragma: no cover - unreachable for n >= 5
        raise GridError(f"could not place crossing walls: {exc}") from exc


def transition(spec: GridSpec, s: Cell, a: Action) -> Cell:
    dx, dy = MOVES[int(a)]
    nxt = (s[0] + int(dx), s[1] + int(dy))
    return nxt if spec.is_free(nxt) else s


def reward(spec: GridSpec, goal: Cell, s: Cell, a: Action, s_next: Cell) -> float:
    return 1.0 if tuple(s_next) == tuple(goal) else 0.0


def enumerate_states(spec: GridSpec) -> list[Cell]:
    return list(spec.states)


def render_ascii(spec: GridSpec, goals: Iterable[Cell] = (), agent: Cell | None = None) -> str:
    """'#' wall or border, '.' free, 'G' goal, 'A' agent. Row 0 is printed first."""
    goals = {tuple(g) for g in goals}
    rows = []
    for y in range(spec.height):
        row = []
        for x in range(spec.width):
            if agent is not None and (x, y) == tuple(agent):
                row.append("A")
            elif (x, y) in goals:
                row.append("G")
            elif spec.is_free((x, y)):
                row.append(".")
            else:
                row.append("#")
        rows.append("".join(row))
    return "\n".join(rows)


def corner_goals(spec: GridSpec) -> list[Cell]:
    """Default base goals: the three free corners other than the top-left start corner."""
    lo_x, hi_x = 1, spec.width - 2
    lo_y, hi_y = 1, spec.height - 2
    corners = [(lo_x, hi_y), (hi_x, hi_y), (hi_x, lo_y)]
    return [c for c in corners if spec.is_free(c)]
