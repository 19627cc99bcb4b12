"""Forward pass of the fully convolutional path-prediction network.

The network stacks the three binary maps (environment, starts, goal) into a
3-channel image, applies 20 identical blocks of 3x3 convolution (64 filters,
stride 1, zero padding), batch normalization and ReLU, and finishes with a
stride-1 transposed convolution to a single channel followed by batch
normalization and a logistic sigmoid.  Dropout after the head is inert at
inference.  Because every stage preserves the spatial size, one weight set
runs on any grid size n >= 3.

FCNW weight format (bit-exact, little-endian)
---------------------------------------------
    magic   4 bytes  "FCNW"
    version u8       1
    count   u32      number of layers
    per layer:
        kind  u8     0 = conv+BN+ReLU, 1 = deconv+BN+sigmoid
        in    u32    input channels
        out   u32    output channels
        kh,kw u32    kernel height, width
        eps   f32    batch-norm epsilon
        f32 arrays, C order: kernel[out][in][kh][kw], bias[out],
        gamma[out], beta[out], mean[out], var[out]
    crc     u32      CRC32 of everything between the version byte and here

Stored kernels are in cross-correlation orientation: inference computes
y[o,i,j] = sum_{c,di,dj} K[o,c,di,dj] * x[c, i+di-1, j+dj-1] for every
layer kind.  Exporters of stride-1 transposed convolutions must therefore
swap the channel axes and flip both spatial axes of their native weight so
the stored tensor reproduces the transposed convolution under plain
cross-correlation.

Accumulation happens in 64-bit floats, over kernel offsets in row-major
order with input channels ascending inside each offset, so identical weights
and inputs give bit-identical outputs.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, replace
from enum import IntEnum
from io import BytesIO
from typing import BinaryIO

import numpy as np

from .errors import ChecksumError, FormatError, ShapeError, SizeMismatch
from .gridworld import GridMap

FCNW_MAGIC = b"FCNW"
FCNW_VERSION = 1


class LayerKind(IntEnum):
    CONV_BN_RELU = 0
    DECONV_BN_SIGMOID = 1


@dataclass(frozen=True)
class LayerWeights:
    """One convolutional block: kernel, bias, and batch-norm statistics.

    Arrays are kept as float64 in memory (the file stores float32) so that
    batch-norm folding is exact algebra rather than a re-quantization.
    """

    kind: LayerKind
    kernel: np.ndarray  # [out, in, kh, kw]
    bias: np.ndarray  # [out]
    gamma: np.ndarray
    beta: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    eps: float
    folded: bool = False

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=np.float64)
        if k.ndim != 4:
            raise ShapeError(f"kernel must be 4-D [out,in,kh,kw], got {k.shape}")
        out = k.shape[0]
        object.__setattr__(self, "kernel", k)
        for name in ("bias", "gamma", "beta", "mean", "var"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (out,):
                raise ShapeError(f"{name} must have shape ({out},), got {arr.shape}")
            object.__setattr__(self, name, arr)
        if np.any(self.var <= 0.0):
            raise ValueError("batch-norm running variance must be positive")

    @property
    def in_channels(self) -> int:
        return self.kernel.shape[1]

    @property
    def out_channels(self) -> int:
        return self.kernel.shape[0]

    @property
    def ksize(self) -> tuple[int, int]:
        return self.kernel.shape[2], self.kernel.shape[3]


@dataclass(frozen=True)
class NetworkWeights:
    layers: tuple[LayerWeights, ...]

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ShapeError("network must contain at least one layer")
        for i, (a, b) in enumerate(zip(self.layers, self.layers[1:])):
            if a.out_channels != b.in_channels:
                raise ShapeError(
                    f"layer {i} outputs {a.out_channels} channels but layer "
                    f"{i + 1} expects {b.in_channels}"
                )


def validate_architecture(w: NetworkWeights) -> None:
    """Strict check of the canonical 21-layer architecture: 20 conv blocks of
    64 3x3 filters (first taking 3 channels) and a 1-channel deconv head."""
    if len(w.layers) != 21:
        raise ShapeError(f"expected 21 layers, got {len(w.layers)}")
    for i, layer in enumerate(w.layers[:-1]):
        expect_in = 3 if i == 0 else 64
        if (
            layer.kind != LayerKind.CONV_BN_RELU
            or layer.in_channels != expect_in
            or layer.out_channels != 64
            or layer.ksize != (3, 3)
        ):
            raise ShapeError(f"layer {i} violates the strict architecture")
    head = w.layers[-1]
    if (
        head.kind != LayerKind.DECONV_BN_SIGMOID
        or head.in_channels != 64
        or head.out_channels != 1
        or head.ksize != (3, 3)
    ):
        raise ShapeError("head layer violates the strict architecture")


@dataclass(frozen=True)
class ValueMap:
    """n-by-n real-valued map; network outputs lie in (0, 1), ground-truth
    masks are binary."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"value map must be square, got {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]


# ---------------------------------------------------------------------------
# FCNW serialization


def save_weights(w: NetworkWeights, stream: BinaryIO) -> None:
    payload = BytesIO()
    payload.write(struct.pack("<I", len(w.layers)))
    for layer in w.layers:
        kh, kw = layer.ksize
        payload.write(
            struct.pack(
                "<BIIIIf",
                int(layer.kind),
                layer.in_channels,
                layer.out_channels,
                kh,
                kw,
                float(layer.eps),
            )
        )
        for arr in (layer.kernel, layer.bias, layer.gamma, layer.beta, layer.mean, layer.var):
            payload.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    body = payload.getvalue()
    stream.write(FCNW_MAGIC)
    stream.write(struct.pack("<B", FCNW_VERSION))
    stream.write(body)
    stream.write(struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF))


class _Reader:
    def __init__(self, data: bytes, offset: int = 0):
        self.data = data
        self.pos = offset

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.data):
            raise FormatError("unexpected end of file")
        chunk = self.data[self.pos : self.pos + count]
        self.pos += count
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_weights(stream: BinaryIO, strict: bool = False) -> NetworkWeights:
    """Parse and validate an FCNW stream.

    Raises FormatError on bad magic/version/truncation, ChecksumError on CRC
    mismatch, ShapeError on inconsistent layer chaining, and ValueError on
    non-positive batch-norm variance.  ``strict`` additionally enforces the
    canonical 21-layer architecture.
    """
    data = stream.read()
    if len(data) < len(FCNW_MAGIC) + 1 + 4:
        raise FormatError("file too short for an FCNW header")
    if data[: len(FCNW_MAGIC)] != FCNW_MAGIC:
        raise FormatError("bad magic; not an FCNW file")
    version = data[len(FCNW_MAGIC)]
    if version != FCNW_VERSION:
        raise FormatError(f"unsupported FCNW version {version}")
    body = data[len(FCNW_MAGIC) + 1 : -4]
    (crc_stored,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(body) & 0xFFFFFFFF != crc_stored:
        raise ChecksumError("FCNW payload CRC mismatch")

    r = _Reader(body)
    (count,) = r.unpack("<I")
    layers = []
    for _ in range(count):
        kind_raw, cin, cout, kh, kw, eps = r.unpack("<BIIIIf")
        try:
            kind = LayerKind(kind_raw)
        except ValueError as exc:
            raise FormatError(f"unknown layer kind {kind_raw}") from exc
        if min(cin, cout, kh, kw) < 1:
            raise FormatError("layer dimensions must be positive")

        def farray(count):
            return np.frombuffer(r.take(4 * count), dtype="<f4").astype(np.float64)

        kernel = farray(cout * cin * kh * kw).reshape(cout, cin, kh, kw)
        bias, gamma, beta, mean, var = (farray(cout) for _ in range(5))
        layers.append(
            LayerWeights(
                kind=kind, kernel=kernel, bias=bias, gamma=gamma,
                beta=beta, mean=mean, var=var, eps=float(eps),
            )
        )
    if r.pos != len(body):
        raise FormatError(f"{len(body) - r.pos} trailing bytes after last layer")
    w = NetworkWeights(layers=tuple(layers))
    if strict:
        validate_architecture(w)
    return w


# ---------------------------------------------------------------------------
# Inference


def fold_batchnorm(w: NetworkWeights) -> NetworkWeights:
    """Collapse conv + batch-norm into a single affine convolution.

    kernel' = kernel * gamma / sqrt(var + eps) and
    bias' = gamma * (bias - mean) / sqrt(var + eps) + beta, per output
    channel; folded layers carry identity statistics so forward() treats
    them unchanged.
    """
    folded = []
    for layer in w.layers:
        scale = layer.gamma / np.sqrt(layer.var + layer.eps)
        out = layer.out_channels
        folded.append(
            replace(
                layer,
                kernel=layer.kernel * scale[:, None, None, None],
                bias=(layer.bias - layer.mean) * scale + layer.beta,
                gamma=np.ones(out),
                beta=np.zeros(out),
                mean=np.zeros(out),
                var=np.ones(out),
                eps=0.0,
                folded=True,
            )
        )
    return NetworkWeights(layers=tuple(folded))


def _conv_same(x: np.ndarray, layer: LayerWeights) -> np.ndarray:
    """Stride-1 zero-padded cross-correlation plus bias, in float64.

    Accumulates kernel offsets in row-major order; the channel reduction
    inside each offset runs ascending (einsum without optimization), which
    pins a reproducible summation order.
    """
    kh, kw = layer.ksize
    n = x.shape[1]
    ph, pw = kh // 2, kw // 2
    xp = np.zeros((x.shape[0], n + kh - 1, n + kw - 1), dtype=np.float64)
    xp[:, ph : ph + n, pw : pw + n] = x
    acc = np.zeros((layer.out_channels, n, n), dtype=np.float64)
    for di in range(kh):
        for dj in range(kw):
            acc += np.einsum(
                "oc,cij->oij",
                layer.kernel[:, :, di, dj],
                xp[:, di : di + n, dj : dj + n],
                optimize=False,
            )
    return acc + layer.bias[:, None, None]


def _batchnorm(y: np.ndarray, layer: LayerWeights) -> np.ndarray:
    scale = layer.gamma / np.sqrt(layer.var + layer.eps)
    return (y - layer.mean[:, None, None]) * scale[:, None, None] + layer.beta[:, None, None]


def _sigmoid(y: np.ndarray) -> np.ndarray:
    out = np.empty_like(y)
    pos = y >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-y[pos]))
    ey = np.exp(y[~pos])
    out[~pos] = ey / (1.0 + ey)
    return out


def _as_map(m, n: int) -> np.ndarray:
    arr = m.cells.astype(np.float64) if isinstance(m, GridMap) else np.asarray(m, dtype=np.float64)
    if arr.shape != (n, n):
        raise SizeMismatch(f"expected a {n}x{n} map, got {arr.shape}")
    return arr


def forward(w: NetworkWeights, env, start_map, goal_map) -> ValueMap:
    """Run the network on stacked [env, start, goal] channels.

    ``env`` may be a GridMap or a binary array; the three maps must share one
    size n.  Returns the sigmoid head output as a ValueMap with values in
    (0, 1).  Pure function: safe to call concurrently on shared weights.
    """
    first = w.layers[0]
    env_arr = env.cells.astype(np.float64) if isinstance(env, GridMap) else np.asarray(env, dtype=np.float64)
    if env_arr.ndim != 2 or env_arr.shape[0] != env_arr.shape[1]:
        raise SizeMismatch(f"environment map must be square, got {env_arr.shape}")
    n = env_arr.shape[0]
    channels = [env_arr, _as_map(start_map, n), _as_map(goal_map, n)]
    if first.in_channels != len(channels):
        raise ShapeError(f"first layer expects {first.in_channels} channels, input has 3")
    x = np.stack(channels)

    for layer in w.layers:
        y = _batchnorm(_conv_same(x, layer), layer)
        if layer.kind == LayerKind.CONV_BN_RELU:
            x = np.maximum(y, 0.0)
        else:
            x = _sigmoid(y)
    if x.shape[0] != 1:
        raise ShapeError("network head must produce exactly one channel")
    return ValueMap(values=x[0])
