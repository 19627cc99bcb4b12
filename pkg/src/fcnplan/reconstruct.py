"""Bidirectional greedy path reconstruction from a value map.

Two heads walk the map: a forward head from the start and a backward head
from the goal, alternating one extension each (forward first).  An extension
moves to the 8-neighbor of the head (never the cell itself) with the maximum
map value, breaking ties toward the smallest row then smallest column, and
consumes that cell by zeroing it.

Consumption is tracked per head, on private copies of the input map with
obstacle cells masked to zero: a head never revisits its own trail, yet can
still step onto the other head's trail, which is exactly the crossing event
that splices the two partial paths together.  The caller's map is never
mutated.

Stop conditions, checked after every extension in this order:
  1. the forward head reaches the goal          -> path = forward walk
  2. the backward head reaches the start        -> path = reversed backward walk
  3. a head lands on the other head's trail at
     index k                                    -> paths spliced at k

Reconstruction fails (a domain outcome, not an error) when the best
neighbor value is at or below the threshold or a head exhausts its step
budget before any stop condition fires.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .astar import Path
from .errors import SizeMismatch
from .gridworld import GridMap
from .netinfer import ValueMap

_WINDOW = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0), (1, 1),
)


@dataclass(frozen=True)
class ReconstructionConfig:
    """Failure detection knobs: an extension must beat ``threshold`` to be
    taken, and each head may extend at most ``max_steps`` times (defaults to
    n*n, the weakest budget that still guarantees termination)."""

    threshold: float = 0.0
    max_steps: int | None = None

    def __post_init__(self):
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass(frozen=True)
class ReconstructionOutcome:
    found: bool
    path: Path | None = None
    stop_condition: int | None = None  # 1, 2 or 3
    crossing_index: int | None = None  # 1-based k, only for condition 3

    def __post_init__(self):
        if self.found and self.path is None:
            raise ValueError("a successful outcome carries a path")


def _extend(head: list[tuple[int, int]], values: np.ndarray, threshold: float):
    """Greedy argmax step; returns the new cell or None when no neighbor
    beats the threshold.  The chosen cell is consumed."""
    r, c = head[-1]
    n = values.shape[0]
    best = None
    best_val = threshold
    for dr, dc in _WINDOW:
        nr, nc = r + dr, c + dc
        if 0 <= nr < n and 0 <= nc < n and values[nr, nc] > best_val:
            best_val = values[nr, nc]
            best = (nr, nc)
    if best is None:
        return None
    values[best] = 0.0
    head.append(best)
    return best


def reconstruct_path(
    grid: GridMap,
    value_map: ValueMap | np.ndarray,
    start: tuple[int, int],
    goal: tuple[int, int],
    cfg: ReconstructionConfig | None = None,
) -> ReconstructionOutcome:
    """Extract a start-to-goal path from a value map.

    Any found path is valid by construction: obstacle cells are masked to
    zero and can never beat the non-negative threshold, and consecutive
    cells are 8-neighbors.
    """
    cfg = cfg or ReconstructionConfig()
    values = value_map.values if isinstance(value_map, ValueMap) else np.asarray(value_map, dtype=np.float64)
    if values.shape != grid.cells.shape:
        raise SizeMismatch(f"value map {values.shape} does not match grid {grid.cells.shape}")
    if not grid.is_free(*start):
        raise ValueError(f"start {start} is not a free cell")
    if not grid.is_free(*goal):
        raise ValueError(f"goal {goal} is not a free cell")

    start = (int(start[0]), int(start[1]))
    goal = (int(goal[0]), int(goal[1]))
    if start == goal:
        return ReconstructionOutcome(found=True, path=Path.from_cells([start]), stop_condition=1)

    masked = np.array(values, dtype=np.float64, copy=True)
    masked[grid.cells] = 0.0
    fwd_values = masked.copy()
    fwd_values[start] = 0.0  # origins count as consumed by their own head
    bwd_values = masked
    bwd_values[goal] = 0.0

    fwd = [start]
    bwd = [goal]
    fwd_index = {start: 1}  # cell -> 1-based position on the walk
    bwd_index = {goal: 1}
    max_steps = cfg.max_steps if cfg.max_steps is not None else grid.n * grid.n

    for _ in range(max_steps):
        cell = _extend(fwd, fwd_values, cfg.threshold)
        if cell is None:
            return ReconstructionOutcome(found=False)
        fwd_index[cell] = len(fwd)
        if cell == goal:
            return ReconstructionOutcome(
                found=True, path=Path.from_cells(fwd), stop_condition=1
            )
        k = bwd_index.get(cell)
        if k is not None:
            # forward head hit bwd[k]; append the backward walk before k, reversed
            cells = fwd + bwd[: k - 1][::-1]
            return ReconstructionOutcome(
                found=True, path=Path.from_cells(cells), stop_condition=3, crossing_index=k
            )

        cell = _extend(bwd, bwd_values, cfg.threshold)
        if cell is None:
            return ReconstructionOutcome(found=False)
        bwd_index[cell] = len(bwd)
        if cell == start:
            return ReconstructionOutcome(
                found=True, path=Path.from_cells(bwd[::-1]), stop_condition=2
            )
        k = fwd_index.get(cell)
        if k is not None:
            # backward head hit fwd[k]; keep the forward walk before k
            cells = fwd[: k - 1] + bwd[::-1]
            return ReconstructionOutcome(
                found=True, path=Path.from_cells(cells), stop_condition=3, crossing_index=k
            )

    return ReconstructionOutcome(found=False)


def reconstruct_multi(
    grid: GridMap,
    value_map: ValueMap | np.ndarray,
    starts,
    goal: tuple[int, int],
    cfg: ReconstructionConfig | None = None,
) -> list[ReconstructionOutcome]:
    """One reconstruction per start, each on a fresh copy of the value map.

    Sharing one consumable map would make later paths depend on start
    ordering, so outcomes are mutually independent and returned in input
    order.
    """
    if not starts:
        raise ValueError("at least one start is required")
    return [reconstruct_path(grid, value_map, s, goal, cfg) for s in starts]
