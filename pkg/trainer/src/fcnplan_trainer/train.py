"""Training loop: MSE loss, Adam, early stopping on validation accuracy.

Validation "accuracy" is per-pixel binary agreement between the output
thresholded at 0.5 and the ground-truth mask; training stops once it fails
to improve for ``patience`` consecutive epochs and the best-scoring weights
are restored.  ``trials`` independent runs are trained and the one with the
highest validation accuracy wins.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .fpdio import read_fpd
from .model import PathNet, build_model

ADAM_LR = 1e-3  # optimizer defaults, recorded in the run manifest
ADAM_BETAS = (0.9, 0.999)


@dataclass
class TrainConfig:
    dataset: str
    batch_size: int = 64
    patience: int = 10
    max_epochs: int = 200
    val_fraction: float = 2000 / 28000  # canonical 26000/2000 split ratio
    trials: int = 5
    seed: int = 0
    conv_layers: int = 20
    filters: int = 64

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in (0, 1)")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


class EarlyStopper:
    """Stop after ``patience`` consecutive epochs without metric improvement."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = -math.inf
        self.best_epoch = 0
        self.stale = 0

    def update(self, metric: float) -> bool:
        """Record one epoch's metric; True means stop now."""
        if metric > self.best:
            self.best = metric
            self.stale = 0
            return False
        self.stale += 1
        return self.stale >= self.patience


def load_tensors(path) -> tuple[torch.Tensor, torch.Tensor]:
    """Dataset file -> (inputs (N,3,n,n), targets (N,1,n,n)) float32."""
    _, samples = read_fpd(path)
    missing = sum(1 for s in samples if s.truth is None)
    if missing:
        raise ValueError(f"{missing} samples lack ground-truth maps; run the oracle stage first")
    x = torch.from_numpy(np.stack([s.input_stack() for s in samples]))
    y = torch.from_numpy(
        np.stack([s.truth.astype(np.float32)[None, :, :] for s in samples])
    )
    return x, y


def pixel_accuracy(pred: torch.Tensor, target: torch.Tensor) -> float:
    return float(((pred > 0.5) == (target > 0.5)).float().mean())


@torch.no_grad()
def _validate(model: PathNet, x, y, batch_size: int) -> float:
    model.eval()
    correct = 0
    total = 0
    for lo in range(0, len(x), batch_size):
        out = model(x[lo : lo + batch_size])
        tgt = y[lo : lo + batch_size]
        correct += int(((out > 0.5) == (tgt > 0.5)).sum())
        total += tgt.numel()
    return correct / total


@dataclass
class TrialHistory:
    train_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    best_val_accuracy: float = -math.inf
    epochs_run: int = 0
    seconds: float = 0.0


def train_single(
    cfg: TrainConfig, x_train, y_train, x_val, y_val, trial: int
) -> tuple[PathNet, TrialHistory]:
    torch.manual_seed(cfg.seed * 1000 + trial)
    model = build_model(x_train.shape[-1], conv_layers=cfg.conv_layers, filters=cfg.filters)
    optimizer = torch.optim.Adam(model.parameters(), lr=ADAM_LR, betas=ADAM_BETAS)
    loss_fn = nn.MSELoss()
    stopper = EarlyStopper(cfg.patience)
    history = TrialHistory()
    best_state = None
    shuffle = np.random.default_rng(cfg.seed * 1000 + trial)
    t0 = time.perf_counter()

    for epoch in range(cfg.max_epochs):
        model.train()
        order = shuffle.permutation(len(x_train))
        epoch_loss = 0.0
        for lo in range(0, len(order), cfg.batch_size):
            idx = torch.from_numpy(order[lo : lo + cfg.batch_size])
            optimizer.zero_grad()
            loss = loss_fn(model(x_train[idx]), y_train[idx])
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach()) * len(idx)
        history.train_loss.append(epoch_loss / len(x_train))

        acc = _validate(model, x_val, y_val, cfg.batch_size)
        history.val_accuracy.append(acc)
        history.epochs_run = epoch + 1
        if acc > history.best_val_accuracy:
            history.best_val_accuracy = acc
            best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
        if stopper.update(acc):
            break

    if best_state is not None:
        model.load_state_dict(best_state)
    history.seconds = time.perf_counter() - t0
    return model, history


def split_dataset(cfg: TrainConfig, x, y):
    order = np.random.default_rng(cfg.seed).permutation(len(x))
    n_val = max(1, int(round(len(x) * cfg.val_fraction)))
    val_idx = torch.from_numpy(order[:n_val])
    train_idx = torch.from_numpy(order[n_val:])
    return x[train_idx], y[train_idx], x[val_idx], y[val_idx]


def train(cfg: TrainConfig) -> tuple[PathNet, dict]:
    """Best-of-``cfg.trials`` training; returns the winner and a manifest."""
    x, y = load_tensors(cfg.dataset)
    x_train, y_train, x_val, y_val = split_dataset(cfg, x, y)

    best_model = None
    best_acc = -math.inf
    trials = []
    for trial in range(cfg.trials):
        model, history = train_single(cfg, x_train, y_train, x_val, y_val, trial)
        trials.append(
            {
                "trial": trial,
                "epochs_run": history.epochs_run,
                "best_val_accuracy": history.best_val_accuracy,
                "final_train_loss": history.train_loss[-1],
                "seconds": round(history.seconds, 2),
            }
        )
        if history.best_val_accuracy > best_acc:
            best_acc = history.best_val_accuracy
            best_model = model

    manifest = {
        "dataset": str(cfg.dataset),
        "train_samples": len(x_train),
        "val_samples": len(x_val),
        "batch_size": cfg.batch_size,
        "optimizer": {"name": "adam", "lr": ADAM_LR, "betas": list(ADAM_BETAS)},
        "loss": "mse",
        "early_stop_patience": cfg.patience,
        "max_epochs": cfg.max_epochs,
        "trials": trials,
        "selected_trial": max(trials, key=lambda t: t["best_val_accuracy"])["trial"],
        "best_val_accuracy": best_acc,
        "seed": cfg.seed,
        "architecture": {"conv_layers": cfg.conv_layers, "filters": cfg.filters},
    }
    return best_model, manifest
