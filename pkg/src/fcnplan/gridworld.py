"""Random grid environments and planning problems.

Environments are n-by-n boolean occupancy grids sampled cell-wise with
obstacle probability ``p_obstacle`` and then repaired so that no 2x2 block
contains two obstacles touching only at a corner (with the other diagonal
free).  Such blocks would let a diagonal move slip between corner-touching
obstacles, which is physically untraversable.

Randomness comes from numpy's PCG64 generator.  All sampling is a pure
function of (config, seed), so datasets are reproducible bit-for-bit across
machines; per-sample streams should be derived with
``numpy.random.SeedSequence(seed).spawn(count)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import Unsatisfiable

# Attempt budgets for sample_problem (start/goal resamples per environment,
# and environment regenerations when require_solvable filters everything out).
RESAMPLE_ATTEMPTS = 100
REGENERATE_ATTEMPTS = 50
# Corner-pinned layouts cannot resample their cells, and at obstacle density
# ~0.5 only ~0.1-0.2% of environments leave three corners plus the center
# free and mutually connected, so this budget is far larger.
FIXED_LAYOUT_ATTEMPTS = 200_000


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 stream; the single generator used by this module."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


class GridMap:
    """Immutable n-by-n boolean occupancy grid (True = obstacle)."""

    __slots__ = ("n", "cells")

    def __init__(self, cells: np.ndarray):
        cells = np.asarray(cells, dtype=bool)
        if cells.ndim != 2 or cells.shape[0] != cells.shape[1]:
            raise ValueError(f"cells must be square, got shape {cells.shape}")
        if cells.shape[0] < 2:
            raise ValueError("grid size must be at least 2")
        self.n = cells.shape[0]
        self.cells = cells
        self.cells.flags.writeable = False

    def in_bounds(self, r: int, c: int) -> bool:
        return 0 <= r < self.n and 0 <= c < self.n

    def is_free(self, r: int, c: int) -> bool:
        return self.in_bounds(r, c) and not self.cells[r, c]

    def free_cells(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(~self.cells)
        return list(zip(rows.tolist(), cols.tolist()))

    def obstacle_fraction(self) -> float:
        return float(self.cells.mean())

    def __eq__(self, other) -> bool:
        return isinstance(other, GridMap) and np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash((self.n, self.cells.tobytes()))

    def __repr__(self) -> str:
        return f"GridMap(n={self.n}, obstacles={int(self.cells.sum())})"


@dataclass(frozen=True)
class GenConfig:
    """Generation parameters.

    ``p_obstacle`` is the per-cell obstacle probability; the free probability
    is always the complement and never stored separately.  ``min_dist`` is the
    minimum Euclidean start-goal distance in cells, ``sources`` the number of
    start points per problem.
    """

    n: int
    p_obstacle: float = 0.6
    min_dist: float = 5.0
    sources: int = 1
    seed: int = 0
    require_solvable: bool = True

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not 0.0 <= self.p_obstacle <= 1.0:
            raise ValueError("p_obstacle must lie in [0, 1]")
        if self.min_dist < 0:
            raise ValueError("min_dist must be non-negative")
        if self.sources < 1:
            raise ValueError("sources must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def p_free(self) -> float:
        return 1.0 - self.p_obstacle


@dataclass(frozen=True)
class PlanProblem:
    """An environment with one or more start cells and a single goal cell."""

    grid: GridMap
    starts: tuple[tuple[int, int], ...]
    goal: tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "starts", tuple((int(r), int(c)) for r, c in self.starts))
        object.__setattr__(self, "goal", (int(self.goal[0]), int(self.goal[1])))
        if not self.starts:
            raise ValueError("at least one start is required")
        for cell in (*self.starts, self.goal):
            if not self.grid.is_free(*cell):
                raise ValueError(f"cell {cell} is not a free cell")
        distinct = set(self.starts)
        if len(distinct) != len(self.starts) or self.goal in distinct:
            raise ValueError("starts must be pairwise distinct and differ from the goal")

    @property
    def k(self) -> int:
        return len(self.starts)


def _forbidden_windows(cells: np.ndarray) -> np.ndarray:
    """Boolean (n-1, n-1) map of 2x2 windows matching either diagonal
    obstacle configuration."""
    a = cells[:-1, :-1]
    b = cells[:-1, 1:]
    c = cells[1:, :-1]
    d = cells[1:, 1:]
    return (~a & b & c & ~d) | (a & ~b & ~c & d)


def count_forbidden_patterns(grid: GridMap | np.ndarray) -> int:
    cells = grid.cells if isinstance(grid, GridMap) else np.asarray(grid, dtype=bool)
    return int(_forbidden_windows(cells).sum())


def _repair(cells: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Remove forbidden diagonal configurations.

    Scans 2x2 windows in row-major order against the current grid state; on a
    match, flips one of the two obstacle cells (picked by ``rng``) to free,
    then rescans until a full pass is clean.  Every flip strictly decreases
    the obstacle count, so at most n*n flips happen.  The scan order and the
    one-draw-per-flip RNG usage are normative: they make repaired grids a
    pure function of (cfg, seed).
    """
    n = cells.shape[0]
    rows = [list(map(bool, row)) for row in cells]
    dirty = True
    while dirty:
        dirty = False
        for i in range(n - 1):
            r0, r1 = rows[i], rows[i + 1]
            for j in range(n - 1):
                a, b, c, d = r0[j], r0[j + 1], r1[j], r1[j + 1]
                if not a and b and c and not d:
                    obstacles = ((i, j + 1), (i + 1, j))
                elif a and not b and not c and d:
                    obstacles = ((i, j), (i + 1, j + 1))
                else:
                    continue
                fi, fj = obstacles[int(rng.integers(0, 2))]
                rows[fi][fj] = False
                dirty = True
    return np.array(rows, dtype=bool)


def generate_environment(cfg: GenConfig, rng: np.random.Generator | None = None) -> GridMap:
    """Sample an occupancy grid and repair forbidden diagonal patterns.

    Each cell is independently an obstacle with probability
    ``cfg.p_obstacle``; the repair pass only removes obstacles, so the
    realized obstacle fraction is on average a few percent below the sampling
    probability.  Deterministic for a fixed (cfg, rng state).
    """
    if rng is None:
        rng = make_rng(cfg.seed)
    cells = rng.random((cfg.n, cfg.n)) < cfg.p_obstacle
    return GridMap(_repair(cells, rng))


def _euclidean(a: tuple[int, int], b: tuple[int, int]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _solvable(grid: GridMap, starts, goal) -> bool:
    from .astar import astar_search  # local import to avoid a module cycle

    return all(astar_search(grid, s, goal)[0] is not None for s in starts)


def _try_sample_layout(grid: GridMap, cfg: GenConfig, rng: np.random.Generator):
    """One uniform draw of goal + k starts from free cells, or None if the
    distance constraint cannot be met for this draw."""
    free = grid.free_cells()
    if len(free) < cfg.sources + 1:
        return None
    goal = free[int(rng.integers(0, len(free)))]
    eligible = [cell for cell in free if cell != goal and _euclidean(cell, goal) >= cfg.min_dist]
    if len(eligible) < cfg.sources:
        return None
    # distinct uniform draws by rejection; keeps the RNG call pattern simple
    picked: list[int] = []
    while len(picked) < cfg.sources:
        i = int(rng.integers(0, len(eligible)))
        if i not in picked:
            picked.append(i)
    starts = tuple(eligible[i] for i in picked)
    return starts, goal


def sample_problem(grid: GridMap, cfg: GenConfig, rng: np.random.Generator | None = None) -> PlanProblem:
    """Draw starts and a goal uniformly from free cells, at least
    ``cfg.min_dist`` from the goal.

    With ``cfg.require_solvable`` the layout is resampled until an optimal
    path exists from every start (RESAMPLE_ATTEMPTS draws), regenerating the
    environment when a grid keeps failing (REGENERATE_ATTEMPTS environments).
    The returned problem's grid therefore may differ from ``grid``.

    Raises Unsatisfiable when no valid problem exists within the budget, e.g.
    when ``min_dist`` exceeds the grid diagonal.
    """
    if rng is None:
        rng = make_rng(cfg.seed)
    if cfg.min_dist > math.sqrt(2.0) * (cfg.n - 1):
        raise Unsatisfiable(f"min_dist {cfg.min_dist} exceeds the diagonal of a {cfg.n}x{cfg.n} grid")

    current = grid
    for _ in range(REGENERATE_ATTEMPTS):
        for _ in range(RESAMPLE_ATTEMPTS):
            layout = _try_sample_layout(current, cfg, rng)
            if layout is None:
                break  # too few eligible cells; regenerate
            starts, goal = layout
            if not cfg.require_solvable or _solvable(current, starts, goal):
                return PlanProblem(grid=current, starts=starts, goal=goal)
        current = generate_environment(cfg, rng)
    raise Unsatisfiable(
        f"no solvable problem found after {REGENERATE_ATTEMPTS} environments "
        f"x {RESAMPLE_ATTEMPTS} layouts"
    )


def generate_problem(cfg: GenConfig, rng: np.random.Generator | None = None) -> PlanProblem:
    """Convenience: fresh environment plus a sampled problem on it."""
    if rng is None:
        rng = make_rng(cfg.seed)
    return sample_problem(generate_environment(cfg, rng), cfg, rng)


def fixed_layout_problem(cfg: GenConfig, rng: np.random.Generator | None = None) -> PlanProblem:
    """Problem with corner starts and a central goal on a fresh environment.

    The starts are the first ``cfg.sources`` of (1,1), (1,n), (n,1) in 1-based
    coordinates and the goal sits at the central cell ((n+1)//2 per axis,
    1-based).  Environments are regenerated until all layout cells are free
    and, with ``require_solvable``, every start reaches the goal.
    """
    if rng is None:
        rng = make_rng(cfg.seed)
    n = cfg.n
    corner_starts = ((0, 0), (0, n - 1), (n - 1, 0))
    if cfg.sources > len(corner_starts):
        raise ValueError("fixed layout supports at most 3 sources")
    starts = corner_starts[: cfg.sources]
    mid = (n + 1) // 2 - 1
    goal = (mid, mid)

    for _ in range(FIXED_LAYOUT_ATTEMPTS):
        grid = generate_environment(cfg, rng)
        if not all(grid.is_free(*cell) for cell in (*starts, goal)):
            continue
        if cfg.require_solvable and not _solvable(grid, starts, goal):
            continue
        return PlanProblem(grid=grid, starts=starts, goal=goal)
    raise Unsatisfiable("no environment admitted the fixed layout within the attempt budget")


def to_maps(problem: PlanProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Binary (env, start, goal) maps, each n-by-n uint8.

    env = 1 on obstacles; start = 1 exactly at the k start cells; goal = 1
    exactly at the goal.  Together with from_maps this is lossless up to the
    ordering of starts.
    """
    n = problem.grid.n
    env = problem.grid.cells.astype(np.uint8)
    start = np.zeros((n, n), dtype=np.uint8)
    for r, c in problem.starts:
        start[r, c] = 1
    goal = np.zeros((n, n), dtype=np.uint8)
    goal[problem.goal] = 1
    return env, start, goal


def from_maps(env: np.ndarray, start: np.ndarray, goal: np.ndarray) -> PlanProblem:
    """Inverse of to_maps; starts are recovered in row-major order."""
    grid = GridMap(np.asarray(env, dtype=bool))
    starts = tuple(zip(*(idx.tolist() for idx in np.nonzero(np.asarray(start) != 0))))
    goal_cells = list(zip(*(idx.tolist() for idx in np.nonzero(np.asarray(goal) != 0))))
    if len(goal_cells) != 1:
        raise ValueError("goal map must contain exactly one marked cell")
    return PlanProblem(grid=grid, starts=starts, goal=goal_cells[0])
