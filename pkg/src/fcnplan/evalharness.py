"""Success-rate, optimality and runtime evaluation over problem sets.

Three measures per problem set:
  SR  = 100 * N_S / N_T   success rate: reconstructions that produced a path
  OP  = 100 * N_O / N_S   optimal fraction within successful predictions
  LR  = L_FCN / L_A*      length ratio of each non-optimal success

Optimality is decided on exact (straight, diagonal) cost pairs, never on
float lengths, so a path is optimal iff its cost equals the A* oracle cost
exactly.  The runtime study records per-sample wall times (search only for
A*, forward pass only for the network; reconstruction is excluded on both
sides), fits a first-order polynomial to the network times and a
second-order one to the A* times, and reports where the fits cross.
"""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .astar import Path, astar_search
from .errors import DegenerateFit, InsufficientSamples, LengthMismatch
from .gridworld import PlanProblem
from .netinfer import NetworkWeights, ValueMap, forward
from .reconstruct import ReconstructionConfig, reconstruct_multi, reconstruct_path
from .gridworld import to_maps

MIN_RUNTIME_SAMPLES = 30


@dataclass(frozen=True)
class SampleRecord:
    problem_id: str
    found: bool
    optimal: bool | None  # None when not found
    l_fcn: float | None
    l_astar: float

    def to_dict(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "found": self.found,
            "optimal": self.optimal,
            "l_fcn": self.l_fcn,
            "l_astar": self.l_astar,
        }


@dataclass
class MetricsReport:
    n_total: int = 0
    n_success: int = 0
    n_optimal: int = 0
    lr_values: list[float] = field(default_factory=list)
    records: list[SampleRecord] = field(default_factory=list)

    @property
    def success_rate(self) -> float | None:
        if self.n_total == 0:
            return None
        return 100.0 * self.n_success / self.n_total

    @property
    def optimality_rate(self) -> float | None:
        """Share of optimal paths within successful predictions; absent when
        nothing succeeded."""
        if self.n_success == 0:
            return None
        return 100.0 * self.n_optimal / self.n_success

    @property
    def lr_mean(self) -> float | None:
        return statistics.fmean(self.lr_values) if self.lr_values else None

    @property
    def lr_ci95(self) -> float | None:
        """Half-width of the 95% confidence interval of the LR mean:
        1.96 * sample stdev / sqrt(N)."""
        if len(self.lr_values) < 2:
            return None
        return 1.96 * statistics.stdev(self.lr_values) / math.sqrt(len(self.lr_values))

    def add(self, record: SampleRecord, optimal_cost_match: bool) -> None:
        self.records.append(record)
        self.n_total += 1
        if record.found:
            self.n_success += 1
            if optimal_cost_match:
                self.n_optimal += 1
            else:
                self.lr_values.append(record.l_fcn / record.l_astar)

    def to_dict(self) -> dict:
        return {
            "n_total": self.n_total,
            "n_success": self.n_success,
            "n_optimal": self.n_optimal,
            "success_rate": self.success_rate,
            "optimality_rate": self.optimality_rate,
            "lr_mean": self.lr_mean,
            "lr_ci95": self.lr_ci95,
            "lr_values": list(self.lr_values),
            "records": [r.to_dict() for r in self.records],
        }


def _oracle_path(problem: PlanProblem, start) -> "Path":
    path, _ = astar_search(problem.grid, start, problem.goal)
    if path is None:
        raise ValueError(f"problem has no path from {start} to {problem.goal}; evaluation needs solvable problems")
    return path


def evaluate_single(
    problems: Sequence[PlanProblem],
    value_maps: Sequence[ValueMap | np.ndarray],
    cfg: ReconstructionConfig | None = None,
) -> MetricsReport:
    """Score one value map per single-start problem against the A* oracle."""
    if len(problems) != len(value_maps):
        raise LengthMismatch(f"{len(problems)} problems vs {len(value_maps)} value maps")
    report = MetricsReport()
    for i, (problem, vm) in enumerate(zip(problems, value_maps)):
        if problem.k != 1:
            raise ValueError("evaluate_single expects single-start problems; use evaluate_multi")
        oracle = _oracle_path(problem, problem.starts[0])
        outcome = reconstruct_path(problem.grid, vm, problem.starts[0], problem.goal, cfg)
        optimal = outcome.found and outcome.path.cost == oracle.cost
        report.add(
            SampleRecord(
                problem_id=str(i),
                found=outcome.found,
                optimal=optimal if outcome.found else None,
                l_fcn=outcome.path.length() if outcome.found else None,
                l_astar=oracle.length(),
            ),
            optimal_cost_match=optimal,
        )
    return report


@dataclass
class MultiMetricsReport:
    """Per-path metrics pooled over all starts, plus joint success rates."""

    k: int
    n_samples: int
    per_path: MetricsReport
    at_least: dict[int, float]  # j -> percentage of samples with >= j paths found

    @property
    def joint_all_rate(self) -> float:
        return self.at_least[self.k]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "n_samples": self.n_samples,
            "joint_all_rate": self.joint_all_rate,
            "at_least": {str(j): rate for j, rate in sorted(self.at_least.items())},
            "per_path": self.per_path.to_dict(),
        }


def evaluate_multi(
    problems: Sequence[PlanProblem],
    value_maps: Sequence[ValueMap | np.ndarray],
    cfg: ReconstructionConfig | None = None,
) -> MultiMetricsReport:
    """Score k-start problems: each start against its own A* oracle, plus the
    fraction of samples where all (or at least j) paths were found."""
    if len(problems) != len(value_maps):
        raise LengthMismatch(f"{len(problems)} problems vs {len(value_maps)} value maps")
    if not problems:
        raise ValueError("evaluate_multi needs at least one problem")
    k = problems[0].k
    if any(p.k != k for p in problems):
        raise ValueError("all problems must share the same number of starts")

    pooled = MetricsReport()
    found_counts = []
    for i, (problem, vm) in enumerate(zip(problems, value_maps)):
        outcomes = reconstruct_multi(problem.grid, vm, problem.starts, problem.goal, cfg)
        found_counts.append(sum(o.found for o in outcomes))
        for j, (start, outcome) in enumerate(zip(problem.starts, outcomes)):
            oracle = _oracle_path(problem, start)
            optimal = outcome.found and outcome.path.cost == oracle.cost
            pooled.add(
                SampleRecord(
                    problem_id=f"{i}:{j}",
                    found=outcome.found,
                    optimal=optimal if outcome.found else None,
                    l_fcn=outcome.path.length() if outcome.found else None,
                    l_astar=oracle.length(),
                ),
                optimal_cost_match=optimal,
            )
    at_least = {
        j: 100.0 * sum(c >= j for c in found_counts) / len(found_counts)
        for j in range(1, k + 1)
    }
    return MultiMetricsReport(k=k, n_samples=len(problems), per_path=pooled, at_least=at_least)


# ---------------------------------------------------------------------------
# Runtime study


def fit_polynomial(points: Sequence[tuple[float, float]], degree: int) -> np.ndarray:
    """Least-squares polynomial coefficients, ascending order (c0, c1, ...).

    Raises DegenerateFit when there are fewer distinct abscissae than
    coefficients.
    """
    if degree < 0:
        raise ValueError("degree must be >= 0")
    xs = np.asarray([p[0] for p in points], dtype=np.float64)
    ys = np.asarray([p[1] for p in points], dtype=np.float64)
    if len(set(xs.tolist())) < degree + 1:
        raise DegenerateFit(f"need at least {degree + 1} distinct abscissae")
    design = np.vander(xs, degree + 1, increasing=True)
    coeffs, _, rank, _ = np.linalg.lstsq(design, ys, rcond=None)
    if rank < degree + 1:
        raise DegenerateFit("rank-deficient design matrix")
    return coeffs


@dataclass(frozen=True)
class TimingRecord:
    steps: int
    repetitions: tuple[float, ...]

    @property
    def duration(self) -> float:  # median damps scheduler jitter
        return statistics.median(self.repetitions)

    def to_dict(self) -> dict:
        return {"steps": self.steps, "duration": self.duration, "repetitions": list(self.repetitions)}


@dataclass
class RuntimeStudy:
    astar_samples: list[TimingRecord]
    network_samples: list[TimingRecord]
    astar_fit: np.ndarray  # degree 2, ascending
    network_fit: np.ndarray  # degree 1, ascending
    crossover_steps: float | None

    def to_dict(self) -> dict:
        return {
            "astar_fit": self.astar_fit.tolist(),
            "network_fit": self.network_fit.tolist(),
            "crossover_steps": self.crossover_steps,
            "astar_samples": [s.to_dict() for s in self.astar_samples],
            "network_samples": [s.to_dict() for s in self.network_samples],
        }


def _fit_crossover(quad: np.ndarray, lin: np.ndarray) -> float | None:
    """Positive length beyond which the quadratic fit stays above the linear
    one, or None when the fits never cross at a positive length."""
    a = float(quad[2])
    b = float(quad[1] - lin[1])
    c = float(quad[0] - lin[0])
    if abs(a) < 1e-30:
        if b <= 0:
            return None
        root = -c / b
        return root if root > 0 else None
    if a < 0:  # quadratic eventually dips below the line; no lasting crossover
        return None
    disc = b * b - 4 * a * c
    if disc < 0:
        return None
    upper_root = (-b + math.sqrt(disc)) / (2 * a)
    return upper_root if upper_root > 0 else None


Timer = Callable[[PlanProblem, int], float]


def astar_timer() -> Timer:
    """Times the A* search loop only (parent-link walking excluded)."""

    def run(problem: PlanProblem, _steps: int) -> float:
        _, stats = astar_search(problem.grid, problem.starts[0], problem.goal)
        return stats.wall_time

    return run


def network_timer(weights: NetworkWeights) -> Timer:
    """Times a single forward pass; map building happens off the clock."""

    def run(problem: PlanProblem, _steps: int) -> float:
        env, start, goal = to_maps(problem)
        t0 = time.perf_counter()
        forward(weights, env, start, goal)
        return time.perf_counter() - t0

    return run


def runtime_study(
    problems: Sequence[PlanProblem],
    astar_time: Timer,
    network_time: Timer,
    repeats: int = 3,
    warmup: int = 2,
) -> RuntimeStudy:
    """Measure both planners on every problem and fit the scaling models.

    The abscissa is the optimal path length in steps (number of moves) from
    the A* oracle.  Timers receive (problem, steps) so synthetic planners can
    inject length-dependent durations; real planners ignore the hint.
    Timing should run single-threaded to avoid contention skew.
    """
    if len(problems) < MIN_RUNTIME_SAMPLES:
        raise InsufficientSamples(
            f"runtime study needs >= {MIN_RUNTIME_SAMPLES} problems, got {len(problems)}"
        )
    steps = [_oracle_path(p, p.starts[0]).steps for p in problems]
    for problem, s in zip(problems[:warmup], steps[:warmup]):
        astar_time(problem, s)
        network_time(problem, s)

    astar_samples = [
        TimingRecord(s, tuple(astar_time(p, s) for _ in range(repeats)))
        for p, s in zip(problems, steps)
    ]
    network_samples = [
        TimingRecord(s, tuple(network_time(p, s) for _ in range(repeats)))
        for p, s in zip(problems, steps)
    ]
    astar_fit = fit_polynomial([(r.steps, r.duration) for r in astar_samples], 2)
    network_fit = fit_polynomial([(r.steps, r.duration) for r in network_samples], 1)
    return RuntimeStudy(
        astar_samples=astar_samples,
        network_samples=network_samples,
        astar_fit=astar_fit,
        network_fit=network_fit,
        crossover_steps=_fit_crossover(astar_fit, network_fit),
    )
