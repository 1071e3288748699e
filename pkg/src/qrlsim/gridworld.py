"""Deterministic gridworld MDP and exact oracles.

Map files are UTF-8 text over ``. # S G`` with one row per line.  Cells are
addressed as ``(x, y)`` with x to the right and y downward from the top-left
corner; the flat state index is ``y * width + x``.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import InvalidArgument, MapParseError

GOAL_REWARD = 100.0
STEP_REWARD = -1.0


class EigenAction(enum.IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3


N_ACTIONS = len(EigenAction)
# (dx, dy) indexed by EigenAction
MOVES = ((0, -1), (0, 1), (-1, 0), (1, 0))


class StepOutcome(NamedTuple):
    next_state: int
    reward: float
    terminal: bool


@dataclass(frozen=True, eq=False)
class GridWorld:
    width: int
    height: int
    blocked: frozenset
    start: tuple
    goal: tuple
    # dense transition model, filled in __post_init__
    next_state: np.ndarray = field(init=False, repr=False)
    reward: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidArgument("grid must be at least 1x1")
        for name in ("start", "goal"):
            x, y = getattr(self, name)
            if not self.in_bounds(x, y):
                raise InvalidArgument(f"{name} {(x, y)} is out of bounds")
            if (x, y) in self.blocked:
                raise InvalidArgument(f"{name} {(x, y)} is blocked")
        if self.start == self.goal:
            raise InvalidArgument("start and goal must differ")

        n = self.width * self.height
        nxt = np.empty((n, N_ACTIONS), dtype=np.int64)
        rew = np.empty((n, N_ACTIONS), dtype=np.float64)
        goal = self.index(self.goal)
        for s in range(n):
            x, y = self.coords(s)
            for a, (dx, dy) in enumerate(MOVES):
                tx, ty = x + dx, y + dy
                if self.in_bounds(tx, ty) and (tx, ty) not in self.blocked:
                    t = self.index((tx, ty))
                else:
                    t = s
                nxt[s, a] = t
                rew[s, a] = GOAL_REWARD if t == goal else STEP_REWARD
        nxt.flags.writeable = False
        rew.flags.writeable = False
        object.__setattr__(self, "next_state", nxt)
        object.__setattr__(self, "reward", rew)

    @property
    def n_states(self) -> int:
        return self.width * self.height

    @property
    def start_index(self) -> int:
        return self.index(self.start)

    @property
    def goal_index(self) -> int:
        return self.index(self.goal)

    def in_bounds(self, x, y) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def index(self, cell) -> int:
        x, y = cell
        return y * self.width + x

    def coords(self, s: int) -> tuple:
        return (s % self.width, s // self.width)

    def is_blocked(self, s: int) -> bool:
        return self.coords(s) in self.blocked

    def free_mask(self) -> np.ndarray:
        mask = np.ones(self.n_states, dtype=bool)
        for cell in self.blocked:
            mask[self.index(cell)] = False
        return mask

    def to_text(self) -> str:
        rows = []
        for y in range(self.height):
            row = []
            for x in range(self.width):
                if (x, y) == self.start:
                    row.append("S")
                elif (x, y) == self.goal:
                    row.append("G")
                elif (x, y) in self.blocked:
                    row.append("#")
                else:
                    row.append(".")
            rows.append("".join(row))
        return "\n".join(rows) + "\n"


def load_map(text: str) -> GridWorld:
    """Parse a map document; reject ragged, ambiguous or unsolvable maps."""
    if text.endswith("\n"):
        text = text[:-1]
    if not text:
        raise MapParseError("empty map")
    rows = text.split("\n")
    width = len(rows[0])
    blocked = set()
    starts, goals = [], []
    for y, row in enumerate(rows):
        if len(row) != width:
            raise MapParseError(f"ragged row: expected {width} columns, got {len(row)}", row=y)
        for x, ch in enumerate(row):
            if ch == "#":
                blocked.add((x, y))
            elif ch == "S":
                starts.append((x, y))
            elif ch == "G":
                goals.append((x, y))
            elif ch != ".":
                raise MapParseError(f"unexpected character {ch!r}", row=y, col=x)
    for label, found in (("S", starts), ("G", goals)):
        if not found:
            raise MapParseError(f"missing {label} cell")
        if len(found) > 1:
            x, y = found[1]
            raise MapParseError(f"duplicate {label} cell", row=y, col=x)
    world = GridWorld(width, len(rows), frozenset(blocked), starts[0], goals[0])
    if _bfs_distance(world) is None:
        gx, gy = world.goal
        raise MapParseError("unreachable goal", row=gy, col=gx)
    return world


def read_map(path) -> GridWorld:
    """Load a map file, or a bundled map by name (``empty20``, ``obstacles20``)."""
    p = Path(path)
    if not p.exists() and p.suffix == "" and p.parent == Path("."):
        bundled = resources.files("qrlsim.maps") / f"{p.name}.txt"
        if bundled.is_file():
            return load_map(bundled.read_text(encoding="utf-8"))
    return load_map(p.read_text(encoding="utf-8"))


def step(g: GridWorld, s: int, a: int) -> StepOutcome:
    """Move from ``s`` in direction ``a``; moves into walls or blocked cells stay put."""
    if not 0 <= s < g.n_states or g.is_blocked(s):
        raise InvalidArgument(f"state {s} is not a free cell")
    if s == g.goal_index:
        raise InvalidArgument("the goal is terminal; start a new episode")
    if not 0 <= a < N_ACTIONS:
        raise InvalidArgument(f"action {a} outside [0, {N_ACTIONS})")
    t = int(g.next_state[s, a])
    return StepOutcome(t, float(g.reward[s, a]), t == g.goal_index)


def _bfs_distance(g: GridWorld):
    start, goal = g.start_index, g.goal_index
    dist = {start: 0}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        if s == goal:
            return dist[s]
        for a in range(N_ACTIONS):
            t = int(g.next_state[s, a])
            if t not in dist:
                dist[t] = dist[s] + 1
                queue.append(t)
    return None


def bfs_shortest(g: GridWorld) -> int:
    """Minimal number of moves from start to goal."""
    return _bfs_distance(g)


def value_iteration(g: GridWorld, gamma: float, tol: float = 1e-10, max_iter: int = 1_000_000):
    """Optimal state values ``V*`` by synchronous Bellman backups.

    The goal is absorbing with value 0.  Iterates until the max-norm
    residual drops below ``tol``.
    """
    if not 0 <= gamma <= 1:
        raise InvalidArgument(f"gamma must be in [0, 1], got {gamma}")
    free = g.free_mask()
    goal = g.goal_index
    V = np.zeros(g.n_states)
    for _ in range(max_iter):
        backup = (g.reward + gamma * V[g.next_state]).max(axis=1)
        backup[goal] = 0.0
        backup[~free] = 0.0
        residual = np.max(np.abs(backup - V))
        V = backup
        if residual < tol:
            break
    return V


def greedy_actions(g: GridWorld, V: np.ndarray, gamma: float) -> np.ndarray:
    """One-step lookahead argmax per state, lowest index on ties."""
    return np.argmax(g.reward + gamma * V[g.next_state], axis=1)


def follow_policy(g: GridWorld, actions, max_steps: int | None = None):
    """Steps from start to goal under a deterministic policy, or None on a cycle."""
    s, goal = g.start_index, g.goal_index
    seen = {s}
    steps = 0
    limit = g.n_states if max_steps is None else max_steps
    while s != goal:
        if steps >= limit:
            return None
        s = int(g.next_state[s, actions[s]])
        steps += 1
        if s in seen:
            return None
        seen.add(s)
    return steps


def random_map(rng: np.random.Generator, width: int, height: int, density: float) -> GridWorld:
    """Random solvable map; obstacles are resampled until the goal is reachable."""
    while True:
        cells = [(x, y) for y in range(height) for x in range(width)]
        i, j = rng.choice(len(cells), size=2, replace=False)
        start, goal = cells[i], cells[j]
        blocked = frozenset(
            c for c in cells if c not in (start, goal) and rng.random() < density
        )
        world = GridWorld(width, height, blocked, start, goal)
        if _bfs_distance(world) is not None:
            return world
