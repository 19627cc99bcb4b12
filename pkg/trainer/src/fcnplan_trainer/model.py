"""Network definition: 20 conv blocks plus a transposed-convolution head.

Every block keeps the spatial size (stride 1, zero padding), so the model is
fully convolutional and one weight set runs on any grid size.  Head ordering
is deconv -> batch norm -> sigmoid -> dropout; dropout only acts during
training.
"""

from __future__ import annotations

import torch
from torch import nn

CONV_LAYERS = 20
FILTERS = 64
KERNEL = 3
DROPOUT = 0.1


class PathNet(nn.Module):
    def __init__(self, conv_layers: int = CONV_LAYERS, filters: int = FILTERS):
        super().__init__()
        blocks = []
        in_ch = 3
        for _ in range(conv_layers):
            blocks += [
                nn.Conv2d(in_ch, filters, KERNEL, stride=1, padding=1),
                nn.BatchNorm2d(filters),
                nn.ReLU(inplace=True),
            ]
            in_ch = filters
        self.body = nn.Sequential(*blocks)
        self.head_deconv = nn.ConvTranspose2d(in_ch, 1, KERNEL, stride=1, padding=1)
        self.head_bn = nn.BatchNorm2d(1)
        self.dropout = nn.Dropout(DROPOUT)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        y = self.head_bn(self.head_deconv(self.body(x)))
        return self.dropout(torch.sigmoid(y))


def build_model(n: int, conv_layers: int = CONV_LAYERS, filters: int = FILTERS) -> PathNet:
    """``n`` is accepted for interface symmetry and sanity checking only; the
    architecture has no size-dependent parameters."""
    if n < 3:
        raise ValueError("grid size must be at least 3")
    return PathNet(conv_layers=conv_layers, filters=filters)


def parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())
