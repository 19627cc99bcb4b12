"""Dataset serialization (FPD) and SVG figure rendering.

FPD dataset format (bit-exact, little-endian)
---------------------------------------------
    magic   4 bytes  "FPD1"
    n       u32      grid side length, shared by all samples
    count   u32      number of samples
    per sample:
        flags  u8    bit 0 = has ground-truth map, bit 1 = has prediction
                     map; other bits must be zero
        env    n*n bytes, row-major, 0 free / 1 obstacle
        k      u16   number of start cells
        starts k * (u16 row, u16 col), 1-based
        goal   (u16 row, u16 col), 1-based
        truth  n*n bytes (0/1), present iff bit 0
        pred   n*n f32, row-major, present iff bit 1
    crc     u32      CRC32 of everything between the magic and here

Ground truth is stored as bytes and predictions as 32-bit floats, mirroring
their semantics (labels vs probabilities).  Every field has a fixed size and
endianness, so files are portable across architectures.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from io import BytesIO
from typing import BinaryIO, Sequence

import numpy as np

from .astar import Path
from .errors import ChecksumError, FormatError
from .gridworld import GridMap, PlanProblem
from .netinfer import ValueMap

FPD_MAGIC = b"FPD1"
_FLAG_TRUTH = 0x01
_FLAG_PRED = 0x02


@dataclass(frozen=True)
class Sample:
    """One planning problem with optional ground-truth and prediction maps."""

    problem: PlanProblem
    truth: np.ndarray | None = None  # uint8 n*n, binary path mask
    pred: np.ndarray | None = None  # float32 n*n value map

    def __post_init__(self):
        n = self.problem.grid.n
        if self.truth is not None:
            t = np.asarray(self.truth, dtype=np.uint8)
            if t.shape != (n, n):
                raise ValueError(f"truth map shape {t.shape} does not match n={n}")
            if not np.isin(t, (0, 1)).all():
                raise ValueError("truth map must be binary")
            object.__setattr__(self, "truth", t)
        if self.pred is not None:
            p = np.asarray(self.pred, dtype=np.float32)
            if p.shape != (n, n):
                raise ValueError(f"prediction map shape {p.shape} does not match n={n}")
            object.__setattr__(self, "pred", p)

    def pred_map(self) -> ValueMap | None:
        return None if self.pred is None else ValueMap(values=self.pred.astype(np.float64))

    def truth_map(self) -> ValueMap | None:
        return None if self.truth is None else ValueMap(values=self.truth.astype(np.float64))


@dataclass(frozen=True)
class Dataset:
    n: int
    samples: tuple[Sample, ...]

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        for i, s in enumerate(self.samples):
            if s.problem.grid.n != self.n:
                raise ValueError(f"sample {i} has grid size {s.problem.grid.n}, expected {self.n}")

    def __len__(self) -> int:
        return len(self.samples)


def write_dataset(dataset: Dataset, stream: BinaryIO) -> None:
    body = BytesIO()
    n = dataset.n
    body.write(struct.pack("<II", n, len(dataset.samples)))
    for sample in dataset.samples:
        flags = (_FLAG_TRUTH if sample.truth is not None else 0) | (
            _FLAG_PRED if sample.pred is not None else 0
        )
        body.write(struct.pack("<B", flags))
        body.write(sample.problem.grid.cells.astype(np.uint8).tobytes())
        body.write(struct.pack("<H", len(sample.problem.starts)))
        for r, c in sample.problem.starts:
            body.write(struct.pack("<HH", r + 1, c + 1))
        body.write(struct.pack("<HH", sample.problem.goal[0] + 1, sample.problem.goal[1] + 1))
        if sample.truth is not None:
            body.write(sample.truth.tobytes())
        if sample.pred is not None:
            body.write(np.ascontiguousarray(sample.pred, dtype="<f4").tobytes())
    payload = body.getvalue()
    stream.write(FPD_MAGIC)
    stream.write(payload)
    stream.write(struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF))


def read_dataset(stream: BinaryIO) -> Dataset:
    """Parse an FPD stream; CRC is verified before any field is interpreted."""
    data = stream.read()
    if len(data) < len(FPD_MAGIC) + 12:
        raise FormatError("file too short for an FPD header")
    if data[: len(FPD_MAGIC)] != FPD_MAGIC:
        raise FormatError("bad magic; not an FPD file")
    payload = data[len(FPD_MAGIC) : -4]
    (crc_stored,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(payload) & 0xFFFFFFFF != crc_stored:
        raise ChecksumError("FPD payload CRC mismatch")

    pos = 0

    def take(count: int) -> bytes:
        nonlocal pos
        if pos + count > len(payload):
            raise FormatError("unexpected end of file")
        chunk = payload[pos : pos + count]
        pos += count
        return chunk

    n, count = struct.unpack("<II", take(8))
    if n < 2:
        raise FormatError(f"invalid grid size {n}")
    samples = []
    for idx in range(count):
        (flags,) = struct.unpack("<B", take(1))
        if flags & ~(_FLAG_TRUTH | _FLAG_PRED):
            raise FormatError(f"sample {idx}: unknown flag bits 0x{flags:02x}")
        env = np.frombuffer(take(n * n), dtype=np.uint8).reshape(n, n)
        if not np.isin(env, (0, 1)).all():
            raise FormatError(f"sample {idx}: environment bytes must be 0 or 1")
        (k,) = struct.unpack("<H", take(2))
        if k < 1:
            raise FormatError(f"sample {idx}: at least one start required")
        cells = struct.unpack(f"<{2 * (k + 1)}H", take(4 * (k + 1)))
        coords = [(cells[2 * i] - 1, cells[2 * i + 1] - 1) for i in range(k + 1)]
        for r, c in coords:
            if not (0 <= r < n and 0 <= c < n):
                raise FormatError(f"sample {idx}: coordinate {(r + 1, c + 1)} out of bounds")
        truth = pred = None
        if flags & _FLAG_TRUTH:
            truth = np.frombuffer(take(n * n), dtype=np.uint8).reshape(n, n)
            if not np.isin(truth, (0, 1)).all():
                raise FormatError(f"sample {idx}: truth bytes must be 0 or 1")
        if flags & _FLAG_PRED:
            pred = np.frombuffer(take(4 * n * n), dtype="<f4").reshape(n, n)
        try:
            problem = PlanProblem(
                grid=GridMap(env.astype(bool)), starts=tuple(coords[:-1]), goal=coords[-1]
            )
        except ValueError as exc:
            raise FormatError(f"sample {idx}: {exc}") from exc
        samples.append(Sample(problem=problem, truth=truth, pred=pred))
    if pos != len(payload):
        raise FormatError(f"{len(payload) - pos} trailing bytes after last sample")
    return Dataset(n=n, samples=tuple(samples))


def path_mask(path: Path, n: int) -> np.ndarray:
    """Binary n*n map marking every cell the path traverses."""
    mask = np.zeros((n, n), dtype=np.uint8)
    for r, c in path.cells:
        mask[r, c] = 1
    return mask


# ---------------------------------------------------------------------------
# SVG rendering

_CELL = 24  # pixels per grid cell


def _dot(cx: float, cy: float, radius: float, color: str) -> str:
    return f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{radius:.2f}" fill="{color}"/>'


def _cross(cx: float, cy: float, arm: float, color: str) -> str:
    return (
        f'<path d="M {cx - arm:.2f} {cy - arm:.2f} L {cx + arm:.2f} {cy + arm:.2f} '
        f'M {cx - arm:.2f} {cy + arm:.2f} L {cx + arm:.2f} {cy - arm:.2f}" '
        f'stroke="{color}" stroke-width="2" fill="none"/>'
    )


def _center(cell: tuple[int, int]) -> tuple[float, float]:
    r, c = cell
    return (c + 0.5) * _CELL, (r + 0.5) * _CELL


def _as_paths(arg) -> list[Path]:
    if arg is None:
        return []
    return [arg] if isinstance(arg, Path) else list(arg)


def render_problem(
    problem: PlanProblem,
    oracle_path: Path | Sequence[Path] | None = None,
    value_map: ValueMap | np.ndarray | None = None,
    reconstructed: Path | Sequence[Path] | None = None,
) -> str:
    """Render a problem as an SVG document.

    Obstacles are black on white, starts green, the goal red; oracle paths
    appear as crosses, a value map as blue dots whose radius scales with the
    cell value (zero-valued cells are omitted), and reconstructed paths as
    blue polylines.  Path arguments accept a single Path or a sequence.
    """
    n = problem.grid.n
    side = n * _CELL
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{side}" height="{side}" '
        f'viewBox="0 0 {side} {side}">',
        f'<rect width="{side}" height="{side}" fill="white"/>',
    ]
    for r, c in zip(*np.nonzero(problem.grid.cells)):
        parts.append(
            f'<rect x="{c * _CELL}" y="{r * _CELL}" width="{_CELL}" height="{_CELL}" fill="black"/>'
        )
    if value_map is not None:
        values = value_map.values if isinstance(value_map, ValueMap) else np.asarray(value_map)
        max_radius = 0.42 * _CELL
        for r in range(n):
            for c in range(n):
                v = float(values[r, c])
                if v > 0.0:
                    cx, cy = _center((r, c))
                    parts.append(_dot(cx, cy, max_radius * min(v, 1.0), "#3b6fd4"))
    for path in _as_paths(reconstructed):
        points = " ".join(f"{x:.2f},{y:.2f}" for x, y in map(_center, path.cells))
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="#3b6fd4" stroke-width="2.5"/>'
        )
    for path in _as_paths(oracle_path):
        for cell in path.cells:
            cx, cy = _center(cell)
            parts.append(_cross(cx, cy, 0.28 * _CELL, "#222222"))
    for cell in problem.starts:
        cx, cy = _center(cell)
        parts.append(_dot(cx, cy, 0.3 * _CELL, "#2ca02c"))
    cx, cy = _center(problem.goal)
    parts.append(_dot(cx, cy, 0.3 * _CELL, "#d62728"))
    parts.append("</svg>")
    return "\n".join(parts)
