"""Optimal 8-connected grid search with exact step-cost arithmetic.

Axis moves cost 1 and diagonal moves cost sqrt(2), so every path cost is
a + b*sqrt(2) with non-negative integers (a, b).  Costs are kept as that
integer pair and compared exactly (sqrt(2) is irrational, so distinct pairs
never collide), which keeps optimality classification free of float-ordering
bugs.  The search heuristic is the Euclidean distance to the goal, which
never exceeds the true remaining cost; the per-step costs above are the g
term.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import total_ordering
from heapq import heappush, heappop

from .gridworld import GridMap

SQRT2 = math.sqrt(2.0)

# Fixed expansion order: 3x3 window, row-major, center excluded.
MOVES = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0), (1, 1),
)


@total_ordering
@dataclass(frozen=True)
class Cost:
    """Exact path cost straight + diag*sqrt(2)."""

    straight: int = 0
    diag: int = 0

    def step(self, dr: int, dc: int) -> "Cost":
        if dr != 0 and dc != 0:
            return Cost(self.straight, self.diag + 1)
        return Cost(self.straight + 1, self.diag)

    def length(self) -> float:
        return self.straight + self.diag * SQRT2

    def __eq__(self, other) -> bool:
        return self.straight == other.straight and self.diag == other.diag

    def __lt__(self, other) -> bool:
        # sign of p + q*sqrt(2) with integer arithmetic only
        p = self.straight - other.straight
        q = self.diag - other.diag
        if p >= 0 and q >= 0:
            return False
        if p <= 0 and q <= 0:
            return p < 0 or q < 0
        if p > 0:  # q < 0: negative iff p^2 < 2 q^2
            return p * p < 2 * q * q
        return 2 * q * q < p * p  # p < 0 <= q


class _HigherCostFirst:
    """Heap tie-breaker wrapper: orders larger exact costs first."""

    __slots__ = ("cost",)

    def __init__(self, cost: Cost):
        self.cost = cost

    def __eq__(self, other) -> bool:
        return self.cost == other.cost

    def __lt__(self, other) -> bool:
        return other.cost < self.cost


@dataclass(frozen=True)
class Path:
    """Ordered free cells from start to goal with their exact cost."""

    cells: tuple[tuple[int, int], ...]
    cost: Cost

    @classmethod
    def from_cells(cls, cells) -> "Path":
        cells = tuple((int(r), int(c)) for r, c in cells)
        cost = Cost()
        for (r0, c0), (r1, c1) in zip(cells, cells[1:]):
            dr, dc = r1 - r0, c1 - c0
            if not (abs(dr) <= 1 and abs(dc) <= 1 and (dr, dc) != (0, 0)):
                raise ValueError(f"cells {(r0, c0)} -> {(r1, c1)} are not 8-neighbors")
            cost = cost.step(dr, dc)
        return cls(cells=cells, cost=cost)

    @property
    def steps(self) -> int:
        return len(self.cells) - 1

    def length(self) -> float:
        return self.cost.length()


@dataclass
class SearchStats:
    expanded: int = 0
    wall_time: float = 0.0
    path_steps: int = 0


def diagonal_blocked(grid: GridMap, r: int, c: int, dr: int, dc: int) -> bool:
    """A diagonal move is refused when both shared orthogonal neighbors are
    obstacles (the corner-touching configuration cannot be traversed).
    Generation removes those patterns, but externally supplied grids may
    still contain them."""
    return bool(grid.cells[r + dr, c]) and bool(grid.cells[r, c + dc])


def astar_search(
    grid: GridMap, start: tuple[int, int], goal: tuple[int, int]
) -> tuple[Path | None, SearchStats]:
    """Minimum-cost 8-connected path from start to goal, or None.

    Ties on the open list break toward lower f, then higher g, then row-major
    cell order, so returned paths are deterministic.  The reported wall time
    covers the search loop only; walking the parent links into a Path happens
    after the clock stops.
    """
    if not grid.is_free(*start):
        raise ValueError(f"start {start} is not a free cell")
    if not grid.is_free(*goal):
        raise ValueError(f"goal {goal} is not a free cell")

    stats = SearchStats()
    t0 = time.perf_counter()

    gr, gc = goal
    g_best: dict[tuple[int, int], Cost] = {start: Cost()}
    parent: dict[tuple[int, int], tuple[int, int]] = {}
    closed: set[tuple[int, int]] = set()
    h0 = math.hypot(start[0] - gr, start[1] - gc)
    open_heap = [(h0, _HigherCostFirst(Cost()), start[0], start[1])]
    found = False

    while open_heap:
        _, _, r, c = heappop(open_heap)
        cell = (r, c)
        if cell in closed:
            continue
        closed.add(cell)
        stats.expanded += 1
        if cell == goal:
            found = True
            break
        g_here = g_best[cell]
        for dr, dc in MOVES:
            nr, nc = r + dr, c + dc
            if not grid.is_free(nr, nc):
                continue
            if dr != 0 and dc != 0 and diagonal_blocked(grid, r, c, dr, dc):
                continue
            neighbor = (nr, nc)
            if neighbor in closed:
                continue
            g_new = g_here.step(dr, dc)
            known = g_best.get(neighbor)
            if known is not None and not (g_new < known):
                continue
            g_best[neighbor] = g_new
            parent[neighbor] = cell
            f = g_new.length() + math.hypot(nr - gr, nc - gc)
            heappush(open_heap, (f, _HigherCostFirst(g_new), nr, nc))

    stats.wall_time = time.perf_counter() - t0
    if not found:
        return None, stats

    cells = [goal]
    while cells[-1] != start:
        cells.append(parent[cells[-1]])
    cells.reverse()
    path = Path(cells=tuple(cells), cost=g_best[goal])
    stats.path_steps = path.steps
    return path, stats


def path_length(path: Path) -> float:
    """Sum of Euclidean norms of consecutive steps; equals a + b*sqrt(2)."""
    return sum(
        math.hypot(r1 - r0, c1 - c0)
        for (r0, c0), (r1, c1) in zip(path.cells, path.cells[1:])
    )
