"""Minimal FPD dataset reader.

Implements the planner toolkit's dataset layout independently (this package
talks to the planner only through files):

    "FPD1" | u32 n | u32 count | samples... | u32 crc32(payload)

per sample: u8 flags (bit0 truth, bit1 pred), n*n env bytes, u16 k,
k*(u16 row, u16 col) 1-based, (u16,u16) goal, optional n*n truth bytes,
optional n*n f32 prediction.  Little-endian throughout; the CRC covers
everything between the magic and the checksum.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

MAGIC = b"FPD1"


@dataclass(frozen=True)
class FpdSample:
    env: np.ndarray  # uint8 (n, n)
    starts: tuple[tuple[int, int], ...]  # 0-based
    goal: tuple[int, int]
    truth: np.ndarray | None
    pred: np.ndarray | None

    def input_stack(self) -> np.ndarray:
        """(3, n, n) float32 network input: environment, starts, goal."""
        n = self.env.shape[0]
        start_map = np.zeros((n, n), dtype=np.float32)
        for r, c in self.starts:
            start_map[r, c] = 1.0
        goal_map = np.zeros((n, n), dtype=np.float32)
        goal_map[self.goal] = 1.0
        return np.stack([self.env.astype(np.float32), start_map, goal_map])


def read_fpd(path) -> tuple[int, list[FpdSample]]:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 16 or data[:4] != MAGIC:
        raise ValueError(f"{path}: not an FPD file")
    payload = data[4:-4]
    (crc,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(payload) & 0xFFFFFFFF != crc:
        raise ValueError(f"{path}: CRC mismatch")
    pos = 0

    def take(count):
        nonlocal pos
        if pos + count > len(payload):
            raise ValueError(f"{path}: truncated")
        chunk = payload[pos : pos + count]
        pos += count
        return chunk

    n, count = struct.unpack("<II", take(8))
    samples = []
    for _ in range(count):
        (flags,) = struct.unpack("<B", take(1))
        env = np.frombuffer(take(n * n), dtype=np.uint8).reshape(n, n)
        (k,) = struct.unpack("<H", take(2))
        coords = struct.unpack(f"<{2 * (k + 1)}H", take(4 * (k + 1)))
        cells = [(coords[2 * i] - 1, coords[2 * i + 1] - 1) for i in range(k + 1)]
        truth = pred = None
        if flags & 0x01:
            truth = np.frombuffer(take(n * n), dtype=np.uint8).reshape(n, n)
        if flags & 0x02:
            pred = np.frombuffer(take(4 * n * n), dtype="<f4").reshape(n, n)
        samples.append(
            FpdSample(env=env, starts=tuple(cells[:-1]), goal=cells[-1], truth=truth, pred=pred)
        )
    return n, samples
