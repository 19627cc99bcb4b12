"""Command-line pipeline: gen -> oracle -> infer -> eval / bench / render.

Each stage reads and writes FPD dataset files (weights travel as FCNW), so
stages can run on different machines or be replaced by other tools that
speak the same formats.  Exit codes: 0 success, 1 usage error, 2 data or
format error, 3 unsatisfiable generation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import dataio, evalharness, gridworld, netinfer, reconstruct
from .astar import astar_search
from .errors import FormatError, InsufficientSamples, LengthMismatch, ShapeError, SizeMismatch, Unsatisfiable

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_UNSATISFIABLE = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise _UsageError(message)


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message, file=sys.stderr)


def _read_dataset(path: str) -> dataio.Dataset:
    with open(path, "rb") as fh:
        return dataio.read_dataset(fh)


def _write_dataset(dataset: dataio.Dataset, path: str) -> None:
    with open(path, "wb") as fh:
        dataio.write_dataset(dataset, fh)


def _load_weights(path: str, strict: bool = False) -> netinfer.NetworkWeights:
    with open(path, "rb") as fh:
        return netinfer.load_weights(fh, strict=strict)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_gen(args) -> int:
    cfg = gridworld.GenConfig(
        n=args.size,
        p_obstacle=args.p_obstacle,
        min_dist=args.min_dist,
        sources=args.sources,
        seed=args.seed,
    )
    children = np.random.SeedSequence(args.seed).spawn(max(args.count, 1))
    samples = []
    for i in range(args.count):
        rng = np.random.Generator(np.random.PCG64(children[i]))
        if args.fixed_layout:
            problem = gridworld.fixed_layout_problem(cfg, rng)
        else:
            problem = gridworld.generate_problem(cfg, rng)
        samples.append(dataio.Sample(problem=problem))
    _write_dataset(dataio.Dataset(n=args.size, samples=tuple(samples)), args.out)
    _say(args, f"wrote {len(samples)} samples to {args.out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    dataset = _read_dataset(args.infile)
    out = []
    unsolvable = 0
    for sample in dataset.samples:
        problem = sample.problem
        paths = [astar_search(problem.grid, s, problem.goal)[0] for s in problem.starts]
        if any(p is None for p in paths):
            unsolvable += 1  # flagged by the absence of a truth map
            out.append(dataio.Sample(problem=problem, pred=sample.pred))
            continue
        mask = np.zeros((dataset.n, dataset.n), dtype=np.uint8)
        for path in paths:
            mask |= dataio.path_mask(path, dataset.n)
        out.append(dataio.Sample(problem=problem, truth=mask, pred=sample.pred))
    _write_dataset(dataio.Dataset(n=dataset.n, samples=tuple(out)), args.out)
    _say(args, f"annotated {len(out) - unsolvable} samples ({unsolvable} unsolvable) -> {args.out}")
    return EXIT_OK


_WORKER_WEIGHTS = None


def _infer_worker_init(weights_path: str) -> None:
    global _WORKER_WEIGHTS
    _WORKER_WEIGHTS = _load_weights(weights_path)


def _infer_worker(maps) -> np.ndarray:
    env, start, goal = maps
    return netinfer.forward(_WORKER_WEIGHTS, env, start, goal).values.astype(np.float32)


def cmd_infer(args) -> int:
    dataset = _read_dataset(args.infile)
    weights = _load_weights(args.weights, strict=args.strict)
    all_maps = [gridworld.to_maps(s.problem) for s in dataset.samples]
    if args.threads > 1 and len(all_maps) > 1:
        with ProcessPoolExecutor(
            max_workers=args.threads, initializer=_infer_worker_init, initargs=(args.weights,)
        ) as pool:
            preds = list(pool.map(_infer_worker, all_maps, chunksize=8))
    else:
        preds = [
            netinfer.forward(weights, env, start, goal).values.astype(np.float32)
            for env, start, goal in all_maps
        ]
    out = tuple(
        dataio.Sample(problem=s.problem, truth=s.truth, pred=p)
        for s, p in zip(dataset.samples, preds)
    )
    _write_dataset(dataio.Dataset(n=dataset.n, samples=out), args.out)
    _say(args, f"predicted {len(out)} value maps -> {args.out}")
    return EXIT_OK


def _value_maps(dataset: dataio.Dataset):
    """Prediction maps when present, else ground-truth masks."""
    maps = []
    for i, sample in enumerate(dataset.samples):
        vm = sample.pred_map() or sample.truth_map()
        if vm is None:
            raise ValueError(f"sample {i} has neither a prediction nor a truth map")
        maps.append(vm)
    return maps


def cmd_eval(args) -> int:
    dataset = _read_dataset(args.infile)
    problems = [s.problem for s in dataset.samples]
    maps = _value_maps(dataset)
    cfg = reconstruct.ReconstructionConfig()
    if args.multi:
        report = evalharness.evaluate_multi(problems, maps, cfg)
        summary = (
            f"k={report.k} joint SR={report.joint_all_rate:.1f}% "
            f"path SR={report.per_path.success_rate:.1f}%"
        )
    else:
        report = evalharness.evaluate_single(problems, maps, cfg)
        op = report.optimality_rate
        summary = (
            f"SR={report.success_rate:.1f}% "
            f"OP={'absent' if op is None else f'{op:.1f}%'}"
        )
    doc = {"kind": "multi" if args.multi else "single", "n": dataset.n, **report.to_dict()}
    with open(args.report, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    _say(args, f"{summary} -> {args.report}")
    return EXIT_OK


def cmd_bench(args) -> int:
    dataset = _read_dataset(args.infile)
    weights = _load_weights(args.weights)
    problems = [s.problem for s in dataset.samples]
    study = evalharness.runtime_study(  # timing stays on one thread
        problems,
        evalharness.astar_timer(),
        evalharness.network_timer(weights),
        repeats=args.repeats,
    )
    doc = {"kind": "runtime", "n": dataset.n, **study.to_dict()}
    with open(args.report, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    cross = study.crossover_steps
    _say(
        args,
        f"fits: astar={[round(v, 9) for v in study.astar_fit]} "
        f"network={[round(v, 9) for v in study.network_fit]} "
        f"crossover={'none' if cross is None else f'{cross:.1f} steps'} -> {args.report}",
    )
    return EXIT_OK


def cmd_render(args) -> int:
    dataset = _read_dataset(args.infile)
    if not 0 <= args.index < len(dataset.samples):
        raise ValueError(f"index {args.index} out of range for {len(dataset.samples)} samples")
    sample = dataset.samples[args.index]
    problem = sample.problem
    oracle_paths = [
        p for s in problem.starts if (p := astar_search(problem.grid, s, problem.goal)[0])
    ]
    recon_paths = []
    vm = sample.pred_map()
    if vm is not None:
        outcomes = reconstruct.reconstruct_multi(problem.grid, vm, problem.starts, problem.goal)
        recon_paths = [o.path for o in outcomes if o.found]
    svg = dataio.render_problem(
        problem,
        oracle_path=oracle_paths or None,
        value_map=vm if vm is not None else sample.truth_map(),
        reconstructed=recon_paths or None,
    )
    with open(args.out, "w") as fh:
        fh.write(svg)
    _say(args, f"rendered sample {args.index} -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base RNG seed")
    common.add_argument(
        "--threads", type=int, default=os.cpu_count() or 1, help="worker parallelism bound"
    )
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    parser = _Parser(prog="fcnplan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a random problem dataset")
    p.add_argument("--size", type=int, required=True, help="grid side length n")
    p.add_argument("--count", type=int, required=True, help="number of samples")
    p.add_argument("--p-obstacle", type=float, default=0.6, dest="p_obstacle")
    p.add_argument("--min-dist", type=float, default=5.0, dest="min_dist")
    p.add_argument("--sources", type=int, default=1, help="start points per sample")
    p.add_argument(
        "--fixed-layout",
        action="store_true",
        help="corner starts and central goal instead of random placement",
    )
    p.add_argument("--out", required=True, help="output FPD file")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("oracle", parents=[common], help="annotate samples with optimal path masks")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("infer", parents=[common], help="add network value-map predictions")
    p.add_argument("--weights", required=True, help="FCNW weights file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument(
        "--strict", action="store_true", help="require the canonical 21-layer architecture"
    )
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", parents=[common], help="reconstruction metrics report")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--multi", action="store_true", help="score k paths per sample plus joint rates")
    p.add_argument("--report", required=True, help="output JSON report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", parents=[common], help="runtime scaling study")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("render", parents=[common], help="render one sample as SVG")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"fcnplan: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except Unsatisfiable as exc:
        print(f"fcnplan: unsatisfiable: {exc}", file=sys.stderr)
        return EXIT_UNSATISFIABLE
    except (
        FormatError,
        ShapeError,
        SizeMismatch,
        LengthMismatch,
        InsufficientSamples,
        ValueError,
        OSError,
    ) as exc:
        print(f"fcnplan: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
