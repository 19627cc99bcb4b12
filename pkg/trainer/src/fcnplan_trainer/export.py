"""FCNW weight export.

Writes the planner's weight container:

    "FCNW" | u8 version=1 | u32 layer count | layers | u32 crc32(payload)

per layer: u8 kind (0 conv+BN+ReLU, 1 deconv+BN+sigmoid), u32 in, u32 out,
u32 kh, u32 kw, f32 bn_eps, then f32 arrays kernel[out][in][kh][kw],
bias[out], gamma[out], beta[out], mean[out], var[out].

The format stores kernels in cross-correlation orientation.  Conv2d weights
already have it; the transposed-convolution head is converted by swapping
the channel axes and flipping both spatial axes, which reproduces the
transposed convolution under plain cross-correlation at stride 1 with zero
padding.
"""

from __future__ import annotations

import struct
import zlib
from io import BytesIO

import numpy as np
import torch
from torch import nn

from .model import PathNet

MAGIC = b"FCNW"
VERSION = 1
KIND_CONV = 0
KIND_DECONV = 1


def _layer_bytes(kind, kernel, bias, bn: nn.BatchNorm2d) -> bytes:
    kernel = np.ascontiguousarray(kernel, dtype="<f4")
    out_ch, in_ch, kh, kw = kernel.shape
    buf = BytesIO()
    buf.write(struct.pack("<BIIIIf", kind, in_ch, out_ch, kh, kw, float(bn.eps)))
    buf.write(kernel.tobytes())
    for arr in (
        bias,
        bn.weight.detach(),
        bn.bias.detach(),
        bn.running_mean.detach(),
        bn.running_var.detach(),
    ):
        buf.write(np.ascontiguousarray(arr.numpy(), dtype="<f4").tobytes())
    return buf.getvalue()


def weights_bytes(model: PathNet) -> bytes:
    model = model.eval()
    convs = [m for m in model.body if isinstance(m, nn.Conv2d)]
    bns = [m for m in model.body if isinstance(m, nn.BatchNorm2d)]
    payload = BytesIO()
    payload.write(struct.pack("<I", len(convs) + 1))
    with torch.no_grad():
        for conv, bn in zip(convs, bns):
            payload.write(
                _layer_bytes(KIND_CONV, conv.weight.detach().numpy(), conv.bias.detach(), bn)
            )
        # [in, out, kh, kw] -> cross-correlation layout [out, in, kh, kw]
        deconv_kernel = model.head_deconv.weight.detach().permute(1, 0, 2, 3).flip(2, 3).numpy()
        payload.write(
            _layer_bytes(
                KIND_DECONV, deconv_kernel, model.head_deconv.bias.detach(), model.head_bn
            )
        )
    body = payload.getvalue()
    return MAGIC + struct.pack("<B", VERSION) + body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def export_weights(model: PathNet, path) -> None:
    """Deterministic serialization: identical weights give identical bytes."""
    with open(path, "wb") as fh:
        fh.write(weights_bytes(model))
