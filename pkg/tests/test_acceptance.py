"""Acceptance criteria 1-10, each reported as one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (about 20 minutes on
one core, dominated by criterion 3) or ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import time

import numpy as np
import pytest
from numpy.polynomial import polynomial as npoly

from ccopt.benchmarks import build_benchmark
from ccopt.budget import CountingEvaluator, EvalBudget
from ccopt.cc_core import VARIANTS, run_variant
from ccopt.pr_search import ContextVector, PrSearchConfig, shrink_region, solve_1d
from ccopt.rbf_shade import BestSolution, RbfShadeConfig, evolve_one_generation, init_subproblem
from ccopt.surrogates import fdc, fdc_from_distances, fit_pr, fit_rbf, maximize_poly

REPORT: dict[int, str] = {}
SEEDS = range(5)
FULL_BUDGET = 300_000


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    REPORT[n] = line
    print(line)


def _monotone(trace) -> bool:
    vals = [v for _, v in trace]
    return all(b <= a for a, b in zip(vals, vals[1:]))


@pytest.fixture(scope="module")
def f1_runs():
    p = build_benchmark("F1", 1000, 50, 0)
    out = []
    for s in SEEDS:
        t0 = time.perf_counter()
        r = run_variant("ASMCC", p, seed=s, max_fes=FULL_BUDGET)
        out.append((r, time.perf_counter() - t0))
    return out


@pytest.fixture(scope="module")
def f9_runs():
    p = build_benchmark("F9", 1000, 50, 0)
    return {v: [run_variant(v, p, seed=s, max_fes=FULL_BUDGET) for s in SEEDS] for v in VARIANTS}


# ── quantitative ───────────────────────────────────────────────────────


@pytest.mark.slow
def test_criterion_01_separable_elliptic(f1_runs):
    finals = np.array([r.best_fitness for r, _ in f1_runs])
    slowest = max(t for _, t in f1_runs)
    ok = finals.mean() <= 1e-10 and slowest <= 60.0 and all(r.fes_used <= FULL_BUDGET for r, _ in f1_runs)
    record(1, ok, f"F1 ASMCC mean {finals.mean():.3e} (<= 1e-10) over 5 seeds; slowest run {slowest:.1f}s (<= 60s)")
    assert ok


@pytest.mark.slow
def test_criterion_02_rastrigin_by_200k():
    p = build_benchmark("F2", 1000, 50, 0)
    r = run_variant("ASMCC", p, seed=0, max_fes=FULL_BUDGET)
    at = [v for fe, v in r.trace if fe <= 200_000]
    best = at[-1]
    ok = best <= 1e-4
    record(2, ok, f"F2 ASMCC best-so-far at 2.0e5 FEs = {best:.3e} (<= 1e-4)")
    assert ok


@pytest.mark.slow
def test_criterion_03_variant_ordering(f9_runs):
    means = {v: float(np.mean([r.best_fitness for r in runs])) for v, runs in f9_runs.items()}
    ok = means["ASMCC"] < means["PS-CC"] < means["SHADE-CC"]
    record(
        3,
        ok,
        "F9 means ASMCC {ASMCC:.3e} < PS-CC {PS-CC:.3e} < SHADE-CC {SHADE-CC:.3e}".format(**means),
    )
    assert ok


def test_criterion_04_q_fes_per_generation():
    p = build_benchmark("F9", 1000, 50, 0)
    cfg = RbfShadeConfig(pop_size=100, q=10)
    budget = EvalBudget(FULL_BUDGET)
    ev = CountingEvaluator(p, budget)
    rng = np.random.default_rng(0)
    x0 = p.lower + rng.random(p.dimension) * (p.upper - p.lower)
    best = BestSolution(x0, ev.evaluate(x0, "context"))
    state = init_subproblem(ev, np.array(p.groups[0]), best, cfg, rng)
    deltas = []
    for _ in range(100):
        before = budget.charge_log().get("generation", 0)
        evolve_one_generation(state, ev, best, cfg)
        deltas.append(budget.charge_log()["generation"] - before)
    ok = deltas == [10] * 100 and budget.charge_log()["generation"] == 1000
    record(4, ok, f"100 RBF-SHADE generations charged {sorted(set(deltas))} FEs each, total {sum(deltas)} (== 1000)")
    assert ok


@pytest.mark.slow
def test_criterion_05_pr_budget_bounds():
    p = build_benchmark("F1", 1000, 50, 0)
    budget = EvalBudget(FULL_BUDGET)
    ev = CountingEvaluator(p, budget)
    rng = np.random.default_rng(0)
    xc = p.lower + rng.random(p.dimension) * (p.upper - p.lower)
    ctx = ContextVector(xc, ev.evaluate(xc, "context"))
    cfg = PrSearchConfig()
    costs = []
    for i in range(p.dimension):
        before = budget.used
        solve_1d(ev, ctx, i, cfg, rng)
        costs.append(budget.used - before)
    lo, hi = cfg.d_s + 1, 2 * cfg.d_s + 1
    ok = min(costs) >= lo and max(costs) <= hi
    record(5, ok, f"1000 PR searches charged {min(costs)}..{max(costs)} FEs (bounds [{lo}, {hi}])")
    assert ok


# ── property based ─────────────────────────────────────────────────────


def test_criterion_06_surrogate_oracles():
    rng = np.random.default_rng(6)
    # PR residual vs normal equations
    x = rng.uniform(-2.0, 3.0, 100)
    y = npoly.polyval(x, [0.5, -1.0, 2.0, 0.3, -0.4, 0.1]) + rng.normal(0, 0.2, 100)
    V = np.vander(x, 6)
    oracle = np.linalg.solve(V.T @ V, V.T @ y)
    res_m = np.linalg.norm(y - fit_pr(x, y, 5).predict(x))
    res_o = np.linalg.norm(y - V @ oracle)
    pr_rel = abs(res_m - res_o) / res_o
    # RBF interpolation and side conditions on a 50-D, 250-point design
    t = rng.uniform(-100, 100, (250, 50))
    vals = np.sum(t**2, axis=1) * 1e3 + rng.normal(0, 1e5, 250)
    m = fit_rbf(t, vals)
    interp_rel = np.max(np.abs(m.predict(t) - vals)) / np.max(np.abs(vals))
    side_sum = abs(m.weights.sum())
    side_mom = float(np.max(np.abs(m.weights @ m.centers)))
    # maximize_poly vs a 1e6-point grid
    coeffs = npoly.polyint(-npoly.polyfromroots([-1.5, -0.5, 0.7, 1.6]))
    xs = np.linspace(-2, 2, 30)
    model = fit_pr(xs, npoly.polyval(xs, coeffs), 5, domain=(-2, 2))
    grid = np.linspace(-2, 2, 1_000_001)
    gap = abs(np.max(npoly.polyval(grid, coeffs)) - npoly.polyval(maximize_poly(model, -2, 2), coeffs))
    ok = pr_rel <= 1e-8 and interp_rel <= 1e-6 and side_sum <= 1e-8 and side_mom <= 1e-8 and gap <= 1e-6
    record(
        6,
        ok,
        f"PR residual rel {pr_rel:.1e}; RBF interp rel {interp_rel:.1e}; "
        f"|sum w| {side_sum:.1e}, |sum w t| {side_mom:.1e}; maximize gap {gap:.1e}",
    )
    assert ok


def test_criterion_07_fdc():
    rng = np.random.default_rng(7)
    in_range, invariant = True, 0.0
    for _ in range(200):
        pts = rng.uniform(-5, 5, (30, 3))
        f = rng.normal(size=30) + np.sum(pts**2, axis=1) * rng.uniform(-1, 1)
        r = fdc(pts, f)
        in_range &= -1.0 <= r <= 1.0
        a, b = rng.uniform(0.01, 100), rng.uniform(-100, 100)
        invariant = max(invariant, abs(fdc(pts, a * f + b) - r))
    d = np.arange(20.0)
    plus = abs(fdc(d, d) - 1.0)
    minus = abs(fdc_from_distances(-3.0 * d + 7.0, d) + 1.0)
    ok = in_range and plus <= 1e-10 and minus <= 1e-10 and invariant <= 1e-10
    record(7, ok, f"range ok={in_range}; |fdc-1| {plus:.1e}, |fdc+1| {minus:.1e}; affine drift {invariant:.1e}")
    assert ok


def test_criterion_08_rebase_consistency():
    # moderate-magnitude objective, so 1e-8 absolute is above double rounding
    p = build_benchmark("F10", 1000, 50, 0)
    cfg = RbfShadeConfig()
    ev = CountingEvaluator(p, EvalBudget(FULL_BUDGET))
    rng = np.random.default_rng(8)
    x0 = p.lower + rng.random(p.dimension) * (p.upper - p.lower)
    best = BestSolution(x0, ev.evaluate(x0, "context"))
    state = init_subproblem(ev, np.array(p.groups[0]), best, cfg, rng)
    worst, zero_ok, improvements = 0.0, True, 0
    for _ in range(50):
        rec = evolve_one_generation(state, ev, best, cfg, debug_problem=p)
        worst = max(worst, rec.debug_max_error)
        if rec.improved:
            improvements += 1
            zero_ok &= state.improvements.max() == 0.0
    ok = zero_ok and worst <= 1e-8 and improvements > 0
    record(8, ok, f"{improvements} rebases, max stored improvement exactly 0: {zero_ok}; oracle error {worst:.1e} (<= 1e-8)")
    assert ok


@pytest.mark.slow
def test_criterion_09_monotone_and_deterministic(f1_runs, f9_runs):
    runs = [r for r, _ in f1_runs] + [r for rs in f9_runs.values() for r in rs]
    monotone = all(_monotone(r.trace) for r in runs)
    p = build_benchmark("F9", 1000, 50, 0)
    identical = True
    for v in VARIANTS:
        a = run_variant(v, p, seed=11, max_fes=110_000).dumps(include_x=True)
        b = run_variant(v, build_benchmark("F9", 1000, 50, 0), seed=11, max_fes=110_000).dumps(include_x=True)
        identical &= a == b
    ok = monotone and identical
    record(9, ok, f"{len(runs)} traces nonincreasing: {monotone}; repeated seeds byte-identical for all variants: {identical}")
    assert ok


def test_criterion_10_region_shrink():
    cases = [
        ((-10.0, 10.0, 0.0, 10.0), (-1.0, 1.0)),
        ((-10.0, 10.0, 9.5, 10.0), (8.5, 10.0)),
        ((-10.0, 10.0, -9.5, 10.0), (-10.0, -8.5)),
        ((-10.0, 10.0, 2.0, 15.0), (-10.0 / 15.0 + 2.0, 10.0 / 15.0 + 2.0)),
    ]
    got = [shrink_region(*args) for args, _ in cases]
    ok = all(g == want for g, (_, want) in zip(got, cases))
    record(10, ok, f"region shrink examples exact: {got}")
    assert ok


if __name__ == "__main__":  # pragma: no cover
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
