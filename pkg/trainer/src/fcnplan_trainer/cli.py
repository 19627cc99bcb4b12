"""Train a path-prediction network from an FPD dataset and export FCNW weights."""

from __future__ import annotations

import argparse
import json
import sys

import torch

from .export import export_weights
from .train import TrainConfig, train


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fcnplan-train", description=__doc__)
    parser.add_argument("--data", required=True, help="FPD dataset with ground-truth maps")
    parser.add_argument("--out", required=True, help="output FCNW weights file")
    parser.add_argument("--manifest", help="optional JSON training manifest")
    parser.add_argument("--batch-size", type=int, default=64)
    parser.add_argument("--patience", type=int, default=10)
    parser.add_argument("--max-epochs", type=int, default=200)
    parser.add_argument("--trials", type=int, default=5)
    parser.add_argument("--val-fraction", type=float, default=2000 / 28000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--conv-layers", type=int, default=20)
    parser.add_argument("--filters", type=int, default=64)
    parser.add_argument("--threads", type=int, default=0, help="torch CPU threads (0 = default)")
    args = parser.parse_args(argv)

    if args.threads > 0:
        torch.set_num_threads(args.threads)
    cfg = TrainConfig(
        dataset=args.data,
        batch_size=args.batch_size,
        patience=args.patience,
        max_epochs=args.max_epochs,
        trials=args.trials,
        val_fraction=args.val_fraction,
        seed=args.seed,
        conv_layers=args.conv_layers,
        filters=args.filters,
    )
    try:
        model, manifest = train(cfg)
    except ValueError as exc:
        print(f"fcnplan-train: error: {exc}", file=sys.stderr)
        return 2
    export_weights(model, args.out)
    manifest["weights"] = args.out
    if args.manifest:
        with open(args.manifest, "w") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
    print(
        f"best validation accuracy {manifest['best_val_accuracy']:.4f} "
        f"(trial {manifest['selected_trial']}) -> {args.out}",
        file=sys.stderr,
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
