"""Deterministic 5x5 navigation with ordered sub-goals.

The observation is ``position * 2**k + mask`` where ``k`` is the number of
sub-goals and bit ``i`` of ``mask`` is set once sub-goal ``i`` has been
visited. Sub-goals only count when entered in order. The episode ends on
reaching the goal cell with every flag set.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

Cell = tuple[int, int]

# (d_row, d_col) for up, right, down, left
MOVES: tuple[Cell, ...] = ((-1, 0), (0, 1), (1, 0), (0, -1))


@dataclass(frozen=True)
class GridWorldSpec:
    width: int = 5
    height: int = 5
    start: Cell = (0, 0)
    subgoals: tuple[Cell, ...] = ((0, 4), (4, 0), (2, 2))
    goal: Cell = (4, 4)
    valid_cost: float = 0.1
    invalid_cost: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(self.start))
        object.__setattr__(self, "goal", tuple(self.goal))
        object.__setattr__(self, "subgoals", tuple(tuple(c) for c in self.subgoals))
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be positive")
        for cell in (self.start, self.goal, *self.subgoals):
            if len(cell) != 2 or not (0 <= cell[0] < self.height and 0 <= cell[1] < self.width):
                raise ValueError(f"cell {cell} lies outside the {self.height}x{self.width} grid")
        if len(set(self.subgoals)) != len(self.subgoals):
            raise ValueError("sub-goal cells must be distinct")
        if self.goal in self.subgoals:
            raise ValueError("the goal cell cannot also be a sub-goal")

    @property
    def num_flags(self) -> int:
        return len(self.subgoals)

    @property
    def num_states(self) -> int:
        return self.width * self.height * (1 << self.num_flags)

    @property
    def full_mask(self) -> int:
        return (1 << self.num_flags) - 1

    def encode(self, cell: Cell, mask: int) -> int:
        return (cell[0] * self.width + cell[1]) * (1 << self.num_flags) + mask

    def decode(self, state: int) -> tuple[Cell, int]:
        pos, mask = divmod(state, 1 << self.num_flags)
        return divmod(pos, self.width), mask

    def start_state(self) -> int:
        return self.encode(self.start, self._collect(self.start, 0))

    def _collect(self, cell: Cell, mask: int) -> int:
        nxt = bin(mask).count("1")
        if nxt < self.num_flags and self.subgoals[nxt] == cell:
            return mask | (1 << nxt)
        return mask

    def is_complete(self, cell: Cell, mask: int) -> bool:
        return cell == self.goal and mask == self.full_mask


def gridworld_step(spec: GridWorldSpec, state: int, action: int) -> tuple[int, float, bool]:
    (row, col), mask = spec.decode(state)
    dr, dc = MOVES[action]
    r, c = row + dr, col + dc
    if not (0 <= r < spec.height and 0 <= c < spec.width):
        return state, -spec.invalid_cost, False
    mask = spec._collect((r, c), mask)
    return spec.encode((r, c), mask), -spec.valid_cost, spec.is_complete((r, c), mask)


def bfs_optimal_steps(spec: GridWorldSpec) -> int:
    """Fewest moves from the start to completion over the (cell, flags) graph."""
    start = spec.start_state()
    if spec.is_complete(*spec.decode(start)):
        return 0
    dist = {start: 0}
    frontier = deque([start])
    while frontier:
        state = frontier.popleft()
        for action in range(len(MOVES)):
            nxt, _, done = gridworld_step(spec, state, action)
            if nxt in dist:
                continue
            dist[nxt] = dist[state] + 1
            if done:
                return dist[nxt]
            frontier.append(nxt)
    raise ValueError("the goal is unreachable from the start cell")


class GridWorld:
    num_actions = len(MOVES)
    higher_is_better = False

    def __init__(self, spec: GridWorldSpec | None = None):
        self.spec = spec or GridWorldSpec()
        self.num_states = self.spec.num_states
        self.state = self.spec.start_state()
        self._optimum: int | None = None

    def reset(self, rng) -> int:
        self.state = self.spec.start_state()
        return self.state

    def step(self, action: int, rng) -> tuple[int, float, bool]:
        self.state, reward, done = gridworld_step(self.spec, self.state, action)
        return self.state, reward, done

    def test_metric(self, ret: float, steps: int) -> float:
        return float(steps)

    def is_perfect(self, metric: float) -> bool:
        if self._optimum is None:
            self._optimum = bfs_optimal_steps(self.spec)
        return metric <= self._optimum
