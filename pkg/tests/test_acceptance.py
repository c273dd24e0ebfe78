"""Acceptance criteria, one test each; verdict lines appear in the terminal summary.

The campaign checks run the full default sweeps at 100 snapshots per point
and take several minutes on one core.
"""

import itertools
import time

import numpy as np
import pytest
from scipy.optimize import Bounds, LinearConstraint, milp

from mmudn.experiments import ExperimentSpec, run_densification_sweep, run_element_budget_sweep, run_snapshot
from mmudn.experiments.harness import cached_power, suite_instance
from mmudn.milp import build_milp, choose_big_m
from mmudn.scenario import ScenarioConfig, calibrate_power, compute_gain_matrix, generate_topology, validate_calibration
from mmudn.sinr import evaluate
from mmudn.solver import BnBConfig, brute_force_maxmin, solve_milp, verify_equivalence
from mmudn.solver.bnb import STATUS_OPTIMAL
from mmudn.solver.lp import OPTIMAL, solve_lp

from .lp_battery import BATTERY
from .test_milp import closed_form, implied_interval

SNAPSHOTS_PER_POINT = 100


def acceptance(number, title):
    return pytest.mark.acceptance(number, title)


@pytest.fixture(scope="module")
def densification():
    return run_densification_sweep(ExperimentSpec(snapshots=SNAPSHOTS_PER_POINT, plots=False))


@pytest.fixture(scope="module")
def element_budget():
    return run_element_budget_sweep(ExperimentSpec(campaign="element_budget", snapshots=SNAPSHOTS_PER_POINT,
                                                   plots=False))


def drop(M, K, L, snr_db, index):
    cfg = ScenarioConfig(M, K, L, target_snr_db=snr_db)
    gains = compute_gain_matrix(generate_topology(cfg, index), cfg).gains
    return gains, L, cached_power(cfg).per_an_power_linear


@acceptance(1, "oracle equivalence on 100 seeded instances")
def test_oracle_equivalence(record_property):
    t0 = time.perf_counter()
    gaps, unsound = [], []
    for i in range(100):
        g, L, p = suite_instance(0, i)
        rep = verify_equivalence(g, L, p, tol=1e-6)
        gaps.append(rep.rel_gap)
        theta = rep.theta_milp
        if evaluate(rep.milp.incumbent, g, L, p).min_sinr < theta - 1e-6 * (1 + theta):
            unsound.append(i)
    seconds = time.perf_counter() - t0
    matched = sum(gap <= 1e-6 for gap in gaps)
    record_property("detail", f"{matched}/100 matched, max rel gap {max(gaps):.3g}, "
                              f"{100 - len(unsound)}/100 incumbents re-evaluated, {seconds:.0f}s")
    assert matched == 100 and not unsound
    assert seconds <= 600


def _reverse_big_m_rows(model):
    """Senses with the third big-M row of each w/n gadget as '<='."""
    mask = np.array([n.startswith(("wm_", "nm_")) for n in model.row_names])
    senses = model.senses.copy()
    senses[mask] = "<="
    return senses


def _highs_theta(model, senses):
    lo = np.where(senses == "<=", -np.inf, model.rhs)
    hi = np.where(senses == ">=", np.inf, model.rhs)
    res = milp(-model.c, constraints=LinearConstraint(model.A, lo, hi), bounds=Bounds(model.lb, model.ub),
               integrality=model.integrality.astype(int))
    return -res.fun


@acceptance(2, "linearization gadgets and the reversed big-M row regression")
def test_gadgets(record_property, rng):
    failures = []
    # binary products: three gadgets, four cases each
    model = build_milp(np.ones((2, 2)), 8, 1.0, 8.0)
    cat = model.catalog
    products = {"z": (cat.z[0, 0, 1], cat.alpha[0, 0], cat.rho[1]),
                "v": (cat.v[0, 0, 1], cat.alpha[0, 0], cat.alpha[1, 0]),
                "u": (cat.u[0, 0, 1, 1], cat.z[0, 0, 1], cat.alpha[1, 0])}
    for (fam, (col, xi, yi)), (x, y) in itertools.product(products.items(), itertools.product((0.0, 1.0), repeat=2)):
        fixed = np.zeros(cat.num_vars)
        fixed[xi], fixed[yi] = x, y
        if implied_interval(model, col, fixed, {fam}) != (x * y, x * y):
            failures.append(f"binary family {fam} ({x}, {y})")
    # big-M products: binary times continuous in [0, Q], 1000 sampled y per x
    Q = 250.0
    model = build_milp(np.ones((2, 2)), 8, 1.0, Q)
    cat = model.catalog
    samples = 0
    for theta in rng.uniform(0.0, Q, 1000):
        for v in (0.0, 1.0):
            for fam, col, bin_col in (("w", cat.w[1, 0, 0], cat.v[1, 0, 0]), ("n", cat.n[0, 1, 0, 1], cat.u[0, 1, 0, 1])):
                fixed = np.zeros(cat.num_vars)
                fixed[bin_col], fixed[cat.theta] = v, theta
                lo, hi = implied_interval(model, col, fixed, {fam})
                samples += 1
                if abs(lo - v * theta) > 1e-9 or abs(hi - v * theta) > 1e-9:
                    failures.append(f"big-M family {fam} v={v} y={theta}")
    # reversed third row: at v = 1 the rows leave w anywhere in [0, theta] and the solved optimum inflates
    reversed_hi = min(Q * 1.0, 40.0, 40.0 - 0.0 * Q)
    g, L, p = np.array([[10.0, 1.0], [2.0, 8.0]]), 100, 1.0
    model = build_milp(g, L, p, choose_big_m(g, L, p))
    theta_true = brute_force_maxmin(g, L, p)[0]
    theta_ours = _highs_theta(model, model.senses)
    theta_reversed = _highs_theta(model, _reverse_big_m_rows(model))
    record_property("detail", f"12 truth-table cases, {samples} sampled products, {len(failures)} failures; "
                              f"theta brute {theta_true:.6g}, corrected {theta_ours:.6g}, reversed {theta_reversed:.6g}")
    assert not failures
    assert reversed_hi == 40.0  # w may stay at 0 although v * theta = 40
    assert abs(theta_ours - theta_true) <= 1e-6 * (1 + theta_true)
    assert theta_reversed > theta_true * (1 + 1e-3)


@acceptance(3, "per-snapshot dominance over 200 snapshots at K=10, M=5, L=100, 30 dB")
def test_dominance(record_property):
    cfg = ScenarioConfig(5, 10, 100, target_snr_db=30.0)
    held, worst, cross = 0, np.inf, []
    for i in range(200):
        res = run_snapshot(cfg, i, "search")
        margin = res.optimal.min_rate - res.baseline.min_rate
        worst = min(worst, margin)
        held += res.outcome.status == STATUS_OPTIMAL and margin >= -1e-9
        if i < 8:  # independent check of the exact search by the MILP
            milp_res = run_snapshot(cfg, i, "milp")
            cross.append(abs(milp_res.outcome.theta - res.outcome.theta) / (1 + res.outcome.theta))
    record_property("detail", f"{held}/200 snapshots, worst margin {worst:.3g} bit/s/Hz, "
                              f"MILP cross-check on 8 snapshots max rel gap {max(cross):.3g}")
    assert held == 200
    assert max(cross) <= 1e-6


@acceptance(4, "densification sweep: overall gain in [20%, 60%], active ANs <= 0.7x baseline")
def test_densification_bands(record_property, densification):
    gain, ratio = densification.overall_gain, densification.active_ratio
    dominated = all(pt.opt_rate >= pt.base_rate - 1e-9 for pt in densification.points)
    record_property("detail", f"overall gain {gain:.1%}, active ratio {ratio:.3f}, "
                              f"{len(densification.points)} points x {SNAPSHOTS_PER_POINT} snapshots")
    assert dominated
    assert 0.20 <= gain <= 0.60
    assert ratio <= 0.7


@acceptance(5, "densification trends at L=200 (M 4 to 10) and M=6 (L 100 to 250)")
def test_densification_trends(record_property, densification):
    by_m = [densification.point(M, 200).opt_rate for M in (4, 6, 8, 10)]
    by_l = [densification.point(6, L).opt_rate for L in (100, 150, 200, 250)]
    inc_m, inc_l = by_m[-1] / by_m[0] - 1, by_l[-1] / by_l[0] - 1
    record_property("detail", "L=200 rates " + ", ".join(f"{r:.4g}" for r in by_m) + f" (+{inc_m:.1%}); "
                    "M=6 rates " + ", ".join(f"{r:.4g}" for r in by_l) + f" (+{inc_l:.1%})")
    assert all(b > a for a, b in zip(by_m, by_m[1:]))
    assert all(b > a for a, b in zip(by_l, by_l[1:]))
    assert 0.05 <= inc_m <= 0.35
    assert 0.05 <= inc_l <= 0.35


@acceptance(6, "element-budget crossover and active ANs non-increasing in SNR")
def test_element_budget(record_property, element_budget):
    rate = {(pt.M, pt.L, pt.snr_db): pt.opt_rate for pt in element_budget.points}
    hi_ok = rate[2, 250, 30.0] >= rate[10, 50, 30.0]
    lo_ok = rate[10, 50, 10.0] >= rate[2, 250, 10.0]
    monotone = []
    for M, L in element_budget.spec.budget_pairs:
        active = [element_budget.point(M, L, s).opt_active for s in (10.0, 20.0, 30.0)]
        monotone.append(all(b <= a for a, b in zip(active, active[1:])))
    record_property("detail", f"30 dB: (2,250) {rate[2, 250, 30.0]:.4g} vs (10,50) {rate[10, 50, 30.0]:.4g}; "
                              f"10 dB: (10,50) {rate[10, 50, 10.0]:.4g} vs (2,250) {rate[2, 250, 10.0]:.4g}; "
                              f"active non-increasing for {sum(monotone)}/{len(monotone)} pairs")
    assert hi_ok
    assert lo_ok
    assert all(monotone)


@acceptance(7, "solver performance at desk scale")
def test_performance(record_property):
    g, L, p = drop(4, 8, 100, 30.0, 0)
    t0 = time.perf_counter()
    brute_force_maxmin(g, L, p)
    t_brute = time.perf_counter() - t0

    t0 = time.perf_counter()
    small = solve_milp(build_milp(g, L, p, choose_big_m(g, L, p, "bottleneck")), BnBConfig(time_limit=120))
    t_small = time.perf_counter() - t0

    g, L, p = drop(5, 10, 100, 30.0, 0)
    t0 = time.perf_counter()
    large = solve_milp(build_milp(g, L, p, choose_big_m(g, L, p, "bottleneck")), BnBConfig(time_limit=600))
    t_large = time.perf_counter() - t0
    record_property("detail", f"brute M4K8 {t_brute:.3f}s; MILP M4K8 {small.status} in {t_small:.1f}s; "
                              f"MILP M5K10 {large.status} in {t_large:.1f}s, gap {large.gap:.3g}")
    assert t_brute < 1.0
    assert small.status == STATUS_OPTIMAL and t_small < 120
    assert large.status == STATUS_OPTIMAL or large.gap <= 0.05


@acceptance(8, "LP battery, calibration validation and model counts")
def test_numerical_plumbing(record_property):
    exact = 0
    for name, problem, status, objective, x in BATTERY:
        sol = solve_lp(problem)
        if sol.status != status:
            continue
        if status != OPTIMAL or (abs(sol.objective - objective) <= 1e-7 and np.max(np.abs(sol.x - x)) <= 1e-7):
            exact += 1
    cfg = ScenarioConfig(5, 10, 100, target_snr_db=30.0)
    snr = validate_calibration(cfg, calibrate_power(cfg))
    mismatched = []
    for K, M in itertools.product(range(1, 7), range(1, 6)):
        model = build_milp(np.ones((K, M)), 8, 1.0, 8.0)
        got = (model.catalog.num_binary, model.catalog.num_continuous, model.num_rows)
        if got != closed_form(K, M):
            mismatched.append((K, M))
    record_property("detail", f"{exact}/{len(BATTERY)} LPs exact; validation SNR {snr:.4f} dB for 30 dB target; "
                              f"{30 - len(mismatched)}/30 (K, M) count triples match")
    assert len(BATTERY) >= 10 and exact == len(BATTERY)
    assert abs(snr - 30.0) <= 0.1
    assert not mismatched
