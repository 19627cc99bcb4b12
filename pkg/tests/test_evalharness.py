import math
import statistics

import numpy as np
import pytest

from fcnplan import (
    Cost,
    DegenerateFit,
    GenConfig,
    GridMap,
    InsufficientSamples,
    LengthMismatch,
    MetricsReport,
    PlanProblem,
    astar_search,
    evaluate_multi,
    evaluate_single,
    fit_polynomial,
    generate_problem,
    make_rng,
    path_mask,
    runtime_study,
)
from fcnplan.evalharness import SampleRecord

SQRT2 = math.sqrt(2)


def perfect_mask_suite(count, n=10):
    problems, masks = [], []
    for seed in range(count):
        problem = generate_problem(GenConfig(n=n, seed=seed), make_rng(seed))
        oracle, _ = astar_search(problem.grid, problem.starts[0], problem.goal)
        problems.append(problem)
        masks.append(path_mask(oracle, n).astype(float))
    return problems, masks


def record(i, found, optimal=None, l_fcn=None, l_astar=5.0):
    return SampleRecord(str(i), found, optimal, l_fcn, l_astar)


def test_success_rate_formula():
    report = MetricsReport()
    for i in range(857):
        report.add(record(i, True, True, 5.0), optimal_cost_match=True)
    for i in range(857, 1000):
        report.add(record(i, False), optimal_cost_match=False)
    assert report.success_rate == pytest.approx(85.7)
    assert report.n_total == 1000 and report.n_success == 857


def test_all_failures_leave_op_absent():
    report = MetricsReport()
    for i in range(10):
        report.add(record(i, False), optimal_cost_match=False)
    assert report.success_rate == 0.0
    assert report.optimality_rate is None
    assert report.lr_mean is None


def test_exact_cost_equality_counts_as_optimal():
    # 2 + 3*sqrt(2) vs 2 + 3*sqrt(2): equal pairs, no LR entry
    assert Cost(2, 3) == Cost(2, 3)
    problems, masks = perfect_mask_suite(5)
    report = evaluate_single(problems, masks)
    assert report.n_optimal == report.n_success == report.n_total == 5
    assert report.lr_values == []


def test_perfect_oracle_identity_small():
    for n in (10, 15):
        problems, masks = perfect_mask_suite(15, n=n)
        report = evaluate_single(problems, masks)
        assert report.success_rate == 100.0
        assert report.optimality_rate == 100.0
        assert report.lr_values == []


def test_non_optimal_reconstruction_yields_lr_above_one():
    grid = GridMap(np.zeros((8, 8), dtype=bool))
    problem = PlanProblem(grid=grid, starts=((4, 1),), goal=(4, 6))
    detour = np.zeros((8, 8))
    for cell in [(4, 1), (3, 2), (3, 3), (3, 4), (3, 5), (4, 6)]:
        detour[cell] = 1.0
    report = evaluate_single([problem], [detour])
    assert report.n_success == 1 and report.n_optimal == 0
    (lr,) = report.lr_values
    assert lr == pytest.approx((3 + 2 * SQRT2) / 5)
    assert lr > 1.0


def test_lr_confidence_interval():
    report = MetricsReport()
    for i, lr in enumerate([1.1, 1.2, 1.3]):
        report.add(record(i, True, False, l_fcn=5 * lr), optimal_cost_match=False)
    assert report.lr_mean == pytest.approx(1.2)
    assert report.lr_ci95 == pytest.approx(1.96 * statistics.stdev([1.1, 1.2, 1.3]) / math.sqrt(3))


def test_metrics_permutation_invariant():
    problems, masks = perfect_mask_suite(12)
    fwd = evaluate_single(problems, masks)
    rev = evaluate_single(problems[::-1], masks[::-1])
    assert fwd.success_rate == rev.success_rate
    assert fwd.optimality_rate == rev.optimality_rate
    assert sorted(fwd.lr_values) == sorted(rev.lr_values)


def test_length_mismatch():
    problems, masks = perfect_mask_suite(3)
    with pytest.raises(LengthMismatch):
        evaluate_single(problems, masks[:-1])


def test_unsolvable_problem_rejected():
    cells = np.zeros((6, 6), dtype=bool)
    cells[3, :] = True
    grid = GridMap(cells)
    problem = PlanProblem(grid=grid, starts=((0, 0),), goal=(5, 5))
    with pytest.raises(ValueError):
        evaluate_single([problem], [np.zeros((6, 6))])


def test_report_json_round_trips():
    import json

    problems, masks = perfect_mask_suite(4)
    doc = evaluate_single(problems, masks).to_dict()
    parsed = json.loads(json.dumps(doc))
    assert parsed["n_total"] == 4
    assert parsed["success_rate"] == 100.0
    assert len(parsed["records"]) == 4


# ---------------------------------------------------------------------------
# Multi-path evaluation


def diagonal_mask(n, start, goal):
    mask = np.zeros((n, n))
    r, c = start
    mask[r, c] = 1.0
    while (r, c) != goal:
        r += int(np.sign(goal[0] - r))
        c += int(np.sign(goal[1] - c))
        mask[r, c] = 1.0
    return mask


def test_multi_joint_rates():
    n = 15
    grid = GridMap(np.zeros((n, n), dtype=bool))
    starts = ((0, 0), (0, 14))
    goal = (7, 7)
    both = np.maximum(diagonal_mask(n, starts[0], goal), diagonal_mask(n, starts[1], goal))
    only_first = diagonal_mask(n, starts[0], goal)
    problems = [PlanProblem(grid=grid, starts=starts, goal=goal)] * 2
    report = evaluate_multi(problems, [both, only_first])
    assert report.k == 2 and report.n_samples == 2
    assert report.per_path.n_total == 4 and report.per_path.n_success == 3
    assert report.per_path.success_rate == pytest.approx(75.0)
    assert report.joint_all_rate == pytest.approx(50.0)
    assert report.at_least[1] == pytest.approx(100.0)
    assert report.at_least[2] == pytest.approx(50.0)


def test_multi_k1_degenerates_to_single():
    problems, masks = perfect_mask_suite(6)
    multi = evaluate_multi(problems, masks)
    single = evaluate_single(problems, masks)
    assert multi.per_path.success_rate == single.success_rate
    assert multi.per_path.optimality_rate == single.optimality_rate
    assert multi.joint_all_rate == single.success_rate


def test_multi_requires_shared_k():
    n = 15
    grid = GridMap(np.zeros((n, n), dtype=bool))
    p1 = PlanProblem(grid=grid, starts=((0, 0),), goal=(7, 7))
    p2 = PlanProblem(grid=grid, starts=((0, 0), (0, 14)), goal=(7, 7))
    with pytest.raises(ValueError):
        evaluate_multi([p1, p2], [np.zeros((n, n))] * 2)


# ---------------------------------------------------------------------------
# Polynomial fitting and the runtime study


def test_fit_linear_exact():
    points = [(x, 2 * x + 1) for x in range(6)]
    coeffs = fit_polynomial(points, 1)
    assert coeffs == pytest.approx([1.0, 2.0], abs=1e-12)


def test_fit_quadratic_exact():
    points = [(x, x * x) for x in range(-3, 4)]
    coeffs = fit_polynomial(points, 2)
    assert coeffs == pytest.approx([0.0, 0.0, 1.0], abs=1e-9)


def test_fit_noisy_quadratic_within_3_sigma():
    rng = np.random.default_rng(42)
    true = (0.5, -1.0, 2.0)
    xs = np.linspace(0, 10, 200)
    sigma = 0.3
    ys = true[0] + true[1] * xs + true[2] * xs**2 + rng.normal(0, sigma, xs.size)
    coeffs = fit_polynomial(list(zip(xs, ys)), 2)
    design = np.vander(xs, 3, increasing=True)
    cov = sigma**2 * np.linalg.inv(design.T @ design)
    for got, want, var in zip(coeffs, true, np.diag(cov)):
        assert abs(got - want) <= 3 * math.sqrt(var)


def test_fit_degenerate_rejected():
    with pytest.raises(DegenerateFit):
        fit_polynomial([(1.0, 2.0), (1.0, 3.0)], 1)


def runtime_problems(count=36, n=12):
    problems = []
    seed = 0
    while len(problems) < count:
        problems.append(generate_problem(GenConfig(n=n, seed=seed), make_rng(seed)))
        seed += 1
    return problems


def test_constant_planner_gives_zero_slope():
    problems = runtime_problems()
    study = runtime_study(
        problems,
        astar_time=lambda p, s: 1e-6 * s * s,
        network_time=lambda p, s: 5e-4,
        repeats=1,
        warmup=0,
    )
    assert abs(study.network_fit[1]) <= 1e-9
    assert study.network_fit[0] == pytest.approx(5e-4, rel=1e-6)


def test_quadratic_planner_coefficient_recovered():
    rng = np.random.default_rng(7)
    problems = runtime_problems()
    c = 2e-6

    def noisy_quadratic(p, s):
        return c * s * s * (1.0 + rng.uniform(-0.05, 0.05))

    study = runtime_study(
        problems,
        astar_time=noisy_quadratic,
        network_time=lambda p, s: 5e-4,
        repeats=3,
        warmup=0,
    )
    assert abs(study.astar_fit[2] - c) <= 0.1 * c


def test_crossover_point():
    problems = runtime_problems()
    study = runtime_study(
        problems,
        astar_time=lambda p, s: 1e-6 * s * s,
        network_time=lambda p, s: 9e-4,
        repeats=1,
        warmup=0,
    )
    assert study.crossover_steps == pytest.approx(30.0, abs=0.5)


def test_insufficient_samples_rejected():
    problems = runtime_problems(count=10)
    with pytest.raises(InsufficientSamples):
        runtime_study(problems, lambda p, s: 0.0, lambda p, s: 0.0)


def test_runtime_records_keep_repetitions():
    problems = runtime_problems(count=30)
    study = runtime_study(
        problems,
        astar_time=lambda p, s: 1e-6 * s * s,
        network_time=lambda p, s: 5e-4,
        repeats=3,
        warmup=0,
    )
    assert all(len(r.repetitions) == 3 for r in study.astar_samples)
    assert all(r.duration == statistics.median(r.repetitions) for r in study.astar_samples)


def test_real_astar_timing_and_expansion_correlation():
    problems = runtime_problems(count=40)
    from fcnplan.evalharness import astar_timer

    timer = astar_timer()
    durations = [timer(p, 0) for p in problems]
    assert all(d >= 0.0 for d in durations)
    steps = []
    expanded = []
    for p in problems:
        path, stats = astar_search(p.grid, p.starts[0], p.goal)
        steps.append(path.steps)
        expanded.append(stats.expanded)
    r = np.corrcoef(steps, expanded)[0, 1]
    assert r > 0.0
