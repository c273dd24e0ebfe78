"""Monte-Carlo harness: per-snapshot solves, sweep campaigns and aggregation.

Every snapshot owns its seed (``base_seed`` plus its index), so points and
snapshots can run in any order or in parallel and give the same records.
Aggregates are computed from the formatted CSV rows, which makes them
exactly recomputable from ``snapshots.csv`` alone.
"""

from __future__ import annotations

import csv
import dataclasses
import functools
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..milp import build_milp, choose_big_m
from ..scenario import (
    PowerConfig,
    ScenarioConfig,
    ScenarioError,
    calibrate_power,
    compute_gain_matrix,
    generate_topology,
)
from ..sinr import Association, RateReport, baseline_association, evaluate
from ..solver.bnb import STATUS_FEASIBLE, STATUS_OPTIMAL, BnBConfig, solve_milp
from ..solver.oracle import brute_force_maxmin, verify_equivalence
from ..solver.search import exact_search

logger = logging.getLogger(__name__)

CAMPAIGNS = ("densification", "element_budget", "single")
SOLVERS = ("milp", "brute", "both", "search")

DEFAULT_M = (2, 4, 6, 8, 10)
DEFAULT_L = (100, 150, 200, 250)
DEFAULT_BUDGET_PAIRS = ((2, 250), (4, 125), (6, 83), (10, 50))
DEFAULT_SNR = {"densification": (30.0,), "element_budget": (10.0, 20.0, 30.0), "single": (30.0,)}

NO_INCUMBENT = "no_incumbent"
MISMATCH = "mismatch"

SNAPSHOT_COLUMNS = [
    "seed", "snapshot", "M", "K", "L", "snr_db", "scheme",
    "min_rate", "active_ans", "theta", "status", "nodes", "seconds",
]
AGGREGATE_COLUMNS = [
    "M", "K", "L", "snr_db", "snapshots",
    "base_rate", "base_rate_hw", "opt_rate", "opt_rate_hw", "gain",
    "base_active", "opt_active", "opt_count",
    "mean_seconds", "max_seconds", "mean_nodes", "limit_hits",
]

Z95 = 1.959963984540054


class ExperimentError(ValueError):
    """Invalid experiment specification."""


def fmt6(value) -> str:
    """Fixed decimal notation with 6 significant digits."""
    v = float(value)
    if not math.isfinite(v):
        return str(v)
    return np.format_float_positional(v, precision=6, unique=False, fractional=False, trim="k").rstrip(".")


@dataclass(frozen=True)
class ExperimentSpec:
    campaign: str = "densification"
    num_ues: int = 10
    m_values: tuple[int, ...] = DEFAULT_M
    l_values: tuple[int, ...] = DEFAULT_L
    snr_values: tuple[float, ...] | None = None  # None: campaign default
    budget_pairs: tuple[tuple[int, int], ...] = DEFAULT_BUDGET_PAIRS
    snapshots: int = 200
    solver: str = "search"
    out_dir: str | None = None
    base_seed: int = 0
    time_limit: float | None = None
    jobs: int = 1
    plots: bool = True
    scenario: dict = field(default_factory=dict)  # extra ScenarioConfig fields

    def __post_init__(self):
        if self.campaign not in CAMPAIGNS:
            raise ExperimentError(f"unknown campaign {self.campaign!r}; expected one of {CAMPAIGNS}")
        if self.solver not in SOLVERS:
            raise ExperimentError(f"unknown solver {self.solver!r}; expected one of {SOLVERS}")
        if self.snapshots < 1:
            raise ExperimentError("snapshots must be >= 1")
        if self.num_ues < 1 or self.jobs < 1:
            raise ExperimentError("num_ues and jobs must be >= 1")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ExperimentError("time_limit must be positive")
        if not self.m_values or not self.l_values or not self.budget_pairs:
            raise ExperimentError("sweep lists must be non-empty")
        if min(self.m_values) < 1 or min(self.l_values) < 1:
            raise ExperimentError("M and L values must be >= 1")
        if self.snr_values is not None and not self.snr_values:
            raise ExperimentError("snr_values must be non-empty")
        budget = max(m * l for m, l in self.budget_pairs)
        for m, l in self.budget_pairs:
            if m < 1 or l != budget // m:
                raise ExperimentError(f"budget pair ({m}, {l}) does not split {budget} elements")
        reserved = {"num_ans", "num_ues", "antennas_per_an", "target_snr_db", "base_seed"} & set(self.scenario)
        if reserved:
            raise ExperimentError(f"scenario overrides may not set {sorted(reserved)}")

    @property
    def snr_list(self) -> tuple[float, ...]:
        return tuple(self.snr_values) if self.snr_values is not None else DEFAULT_SNR[self.campaign]

    @property
    def budget(self) -> int:
        return max(m * l for m, l in self.budget_pairs)

    def points(self) -> list[tuple[int, int, float]]:
        """Sweep points ``(M, L, snr_db)`` in output order."""
        snrs = self.snr_list
        if self.campaign == "densification":
            return [(m, l, s) for s in snrs for l in self.l_values for m in self.m_values]
        if self.campaign == "element_budget":
            return [(m, l, s) for s in snrs for m, l in self.budget_pairs]
        return [(self.m_values[0], self.l_values[0], snrs[0])]

    def scenario_config(self, M: int, L: int, snr_db: float) -> ScenarioConfig:
        try:
            return ScenarioConfig(
                num_ans=M, num_ues=self.num_ues, antennas_per_an=L,
                target_snr_db=float(snr_db), base_seed=self.base_seed, **self.scenario,
            )
        except (TypeError, ScenarioError) as exc:
            raise ExperimentError(str(exc)) from exc


# ---------------------------------------------------------------------------
# single snapshot

@functools.lru_cache(maxsize=256)
def _calibrated_total(config: ScenarioConfig) -> PowerConfig:
    return calibrate_power(config)


def cached_power(config: ScenarioConfig) -> PowerConfig:
    """Calibration depends on neither M, K nor L, so it is cached without them."""
    key = config.replace(num_ans=1, num_ues=1, antennas_per_an=1)
    total = _calibrated_total(key)
    return PowerConfig.from_total(total.total_power_linear, config.num_ans, total.mean_gain)


@dataclass
class SolverOutcome:
    association: Association | None
    theta: float
    status: str
    nodes: int
    seconds: float


@dataclass
class SnapshotResult:
    config: ScenarioConfig
    snapshot_index: int
    power: PowerConfig
    baseline_association: Association
    baseline: RateReport
    optimal_association: Association | None
    optimal: RateReport | None
    outcome: SolverOutcome
    oracle: SolverOutcome | None = None
    gains: np.ndarray | None = field(default=None, repr=False)

    def rows(self) -> list[list[str]]:
        cfg = self.config
        head = [str(cfg.base_seed), str(self.snapshot_index), str(cfg.num_ans), str(cfg.num_ues),
                str(cfg.antennas_per_an), fmt6(cfg.target_snr_db)]
        base = self.baseline
        out = [head + ["baseline", fmt6(base.min_rate), str(base.active_an_count),
                       fmt6(base.min_sinr), "baseline", "0", "0"]]

        def solved(scheme, oc: SolverOutcome, report):
            rate = fmt6(report.min_rate) if report is not None else "nan"
            active = str(report.active_an_count) if report is not None else "nan"
            return head + [scheme, rate, active, fmt6(oc.theta), oc.status, str(oc.nodes), fmt6(oc.seconds)]

        out.append(solved("optimal", self.outcome, self.optimal))
        if self.oracle is not None:
            rep = evaluate(self.oracle.association, self.gains, cfg.antennas_per_an, self.power.per_an_power_linear)
            out.append(solved("oracle", self.oracle, rep))
        return out


def _solve(gains: np.ndarray, L: int, p: float, solver: str, time_limit: float | None) -> SolverOutcome:
    t0 = time.perf_counter()
    if solver == "milp":
        model = build_milp(gains, L, p, choose_big_m(gains, L, p, "bottleneck"))
        res = solve_milp(model, BnBConfig(time_limit=time_limit, log_every=10**9))
        status = res.status if res.incumbent is not None else NO_INCUMBENT
        return SolverOutcome(res.incumbent, res.theta_star, status, res.nodes_explored, time.perf_counter() - t0)
    if solver == "brute":
        theta, assoc = brute_force_maxmin(gains, L, p)
        K, M = gains.shape
        return SolverOutcome(assoc, theta, STATUS_OPTIMAL, M**K, time.perf_counter() - t0)
    if solver == "search":
        res = exact_search(gains, L, p, time_limit=time_limit)
        status = STATUS_OPTIMAL if res.optimal else STATUS_FEASIBLE
        return SolverOutcome(res.association, res.theta_star, status, res.nodes, time.perf_counter() - t0)
    raise ExperimentError(f"unknown solver {solver!r}")


def run_snapshot(config: ScenarioConfig, snapshot_index: int, solver_choice: str = "search",
                 time_limit: float | None = None) -> SnapshotResult:
    """Topology, gains, calibrated power, baseline and optimal association for one drop.

    With ``solver_choice="both"`` the MILP gives the optimal record and the
    enumeration oracle is kept alongside; disagreement sets status
    ``"mismatch"``.
    """
    if solver_choice not in SOLVERS:
        raise ExperimentError(f"unknown solver {solver_choice!r}")
    topo = generate_topology(config, snapshot_index)
    gains = compute_gain_matrix(topo, config).gains
    power = cached_power(config)
    L, p = config.antennas_per_an, power.per_an_power_linear
    base_assoc = baseline_association(gains)
    base = evaluate(base_assoc, gains, L, p)

    oracle = None
    if solver_choice == "both":
        outcome = _solve(gains, L, p, "milp", time_limit)
        oracle = _solve(gains, L, p, "brute", None)
        if outcome.association is None or abs(outcome.theta - oracle.theta) > 1e-6 * (1 + abs(oracle.theta)):
            outcome.status = MISMATCH
    else:
        outcome = _solve(gains, L, p, solver_choice, time_limit)
    opt = evaluate(outcome.association, gains, L, p) if outcome.association is not None else None
    return SnapshotResult(config, snapshot_index, power, base_assoc, base, outcome.association, opt,
                          outcome, oracle, gains)


def _snapshot_rows(config: ScenarioConfig, solver: str, time_limit, index: int) -> list[list[str]]:
    return run_snapshot(config, index, solver, time_limit).rows()


# ---------------------------------------------------------------------------
# aggregation

@dataclass(frozen=True)
class PointAggregate:
    M: int
    K: int
    L: int
    snr_db: float
    snapshots: int
    base_rate: float
    base_rate_hw: float
    opt_rate: float
    opt_rate_hw: float
    gain: float
    base_active: float
    opt_active: float
    opt_count: int  # snapshots with an incumbent
    mean_seconds: float
    max_seconds: float
    mean_nodes: float
    limit_hits: int

    def row(self) -> list[str]:
        return [str(self.M), str(self.K), str(self.L), fmt6(self.snr_db), str(self.snapshots),
                fmt6(self.base_rate), fmt6(self.base_rate_hw), fmt6(self.opt_rate), fmt6(self.opt_rate_hw),
                fmt6(self.gain), fmt6(self.base_active), fmt6(self.opt_active), str(self.opt_count),
                fmt6(self.mean_seconds), fmt6(self.max_seconds), fmt6(self.mean_nodes), str(self.limit_hits)]


def _half_width(values: np.ndarray) -> float:
    if len(values) < 2:
        return math.nan
    return float(Z95 * values.std(ddof=1) / math.sqrt(len(values)))


def _aggregate_group(key, rows: list[dict]) -> PointAggregate:
    M, K, L, snr = key
    base = [r for r in rows if r["scheme"] == "baseline"]
    opt = [r for r in rows if r["scheme"] == "optimal" and r["status"] != NO_INCUMBENT]
    every = [r for r in rows if r["scheme"] == "optimal"]
    b_rate = np.array([float(r["min_rate"]) for r in base])
    o_rate = np.array([float(r["min_rate"]) for r in opt])
    b_mean = float(b_rate.mean())
    o_mean = float(o_rate.mean()) if len(o_rate) else math.nan
    secs = np.array([float(r["seconds"]) for r in every]) if every else np.zeros(1)
    return PointAggregate(
        M, K, L, snr, len(base),
        b_mean, _half_width(b_rate), o_mean, _half_width(o_rate),
        (o_mean - b_mean) / b_mean if b_mean != 0 else math.nan,
        float(np.mean([float(r["active_ans"]) for r in base])),
        float(np.mean([float(r["active_ans"]) for r in opt])) if opt else math.nan,
        len(opt),
        float(secs.mean()), float(secs.max()),
        float(np.mean([float(r["nodes"]) for r in every])) if every else 0.0,
        sum(r["status"] != STATUS_OPTIMAL for r in every),
    )


def aggregate_rows(rows: list[dict]) -> list[PointAggregate]:
    """Per-point aggregates from string-valued snapshot rows, in first-seen order."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        key = (int(r["M"]), int(r["K"]), int(r["L"]), float(r["snr_db"]))
        groups.setdefault(key, []).append(r)
    return [_aggregate_group(k, v) for k, v in groups.items()]


def read_snapshot_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@dataclass
class AggregateReport:
    spec: ExperimentSpec
    points: list[PointAggregate]
    snapshot_rows: list[list[str]] = field(repr=False, default_factory=list)
    wall_time: float = 0.0

    def point(self, M: int, L: int, snr_db: float | None = None) -> PointAggregate:
        for pt in self.points:
            if pt.M == M and pt.L == L and (snr_db is None or pt.snr_db == float(snr_db)):
                return pt
        raise KeyError((M, L, snr_db))

    @property
    def overall_gain(self) -> float:
        """Mean of the per-point relative min-rate gains."""
        return float(np.mean([pt.gain for pt in self.points]))

    @property
    def active_ratio(self) -> float:
        """Mean optimal active ANs over mean baseline active ANs, pooled over points."""
        return float(sum(pt.opt_active for pt in self.points) / sum(pt.base_active for pt in self.points))

    def snapshot_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SNAPSHOT_COLUMNS)
        w.writerows(self.snapshot_rows)
        return buf.getvalue()

    def aggregate_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(AGGREGATE_COLUMNS)
        w.writerows(pt.row() for pt in self.points)
        return buf.getvalue()

    def summary_lines(self) -> list[str]:
        out = []
        for pt in self.points:
            out.append(
                f"M={pt.M} L={pt.L} snr={fmt6(pt.snr_db)}dB n={pt.snapshots} "
                f"base={fmt6(pt.base_rate)} opt={fmt6(pt.opt_rate)} gain={pt.gain:+.1%} "
                f"active {fmt6(pt.base_active)}->{fmt6(pt.opt_active)}"
            )
        return out

    def write(self, out_dir) -> list[Path]:
        """Write snapshots.csv, aggregate.csv and (optionally) SVG charts."""
        from .svg import campaign_charts

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = [out / "snapshots.csv", out / "aggregate.csv"]
        written[0].write_text(self.snapshot_csv())
        written[1].write_text(self.aggregate_csv())
        if self.spec.plots:
            for name, svg in campaign_charts(self).items():
                path = out / name
                path.write_text(svg)
                written.append(path)
        return written


# ---------------------------------------------------------------------------
# campaigns

def run_point(spec: ExperimentSpec, M: int, L: int, snr_db: float, executor=None) -> list[list[str]]:
    config = spec.scenario_config(M, L, snr_db)
    task = functools.partial(_snapshot_rows, config, spec.solver, spec.time_limit)
    indices = range(spec.snapshots)
    chunks = executor.map(task, indices) if executor is not None else map(task, indices)
    rows = [row for chunk in chunks for row in chunk]
    return rows


def _run(spec: ExperimentSpec) -> AggregateReport:
    t0 = time.perf_counter()
    all_rows: list[list[str]] = []
    executor = ProcessPoolExecutor(spec.jobs) if spec.jobs > 1 else None
    try:
        for M, L, snr in spec.points():
            t = time.perf_counter()
            all_rows.extend(run_point(spec, M, L, snr, executor))
            logger.info("point M=%d L=%d snr=%g done in %.1fs", M, L, snr, time.perf_counter() - t)
    finally:
        if executor is not None:
            executor.shutdown()
    dict_rows = [dict(zip(SNAPSHOT_COLUMNS, r)) for r in all_rows]
    report = AggregateReport(spec, aggregate_rows(dict_rows), all_rows, time.perf_counter() - t0)
    if spec.out_dir is not None:
        report.write(spec.out_dir)
    return report


def _with_campaign(spec: ExperimentSpec, campaign: str) -> ExperimentSpec:
    if spec.campaign == campaign:
        return spec
    return dataclasses.replace(spec, campaign=campaign)


def run_densification_sweep(spec: ExperimentSpec | None = None) -> AggregateReport:
    """Rate and active ANs over the (M, L) grid at fixed K and SNR."""
    return _run(_with_campaign(spec or ExperimentSpec(), "densification"))


def run_element_budget_sweep(spec: ExperimentSpec | None = None) -> AggregateReport:
    """Fixed total element budget split over different AN counts, per target SNR."""
    return _run(_with_campaign(spec or ExperimentSpec(campaign="element_budget"), "element_budget"))


def run_campaign(spec: ExperimentSpec) -> AggregateReport:
    return _run(spec)


# ---------------------------------------------------------------------------
# oracle-equivalence suite

@dataclass
class VerifyReport:
    instances: int
    matched: int
    max_rel_gap: float
    failures: list[int]
    seconds: float

    def line(self) -> str:
        return f"{self.matched}/{self.instances} instances matched, max rel gap {self.max_rel_gap:.3g}"


def suite_instance(seed: int, index: int, snr_db: float = 20.0) -> tuple[np.ndarray, int, float]:
    """Instance ``index`` of the equivalence suite: M in {2,3,4}, K in 2..6, L in {16, 64}."""
    M = (2, 3, 4)[index % 3]
    K = 2 + (index // 3) % 5
    L = (16, 64)[(index // 15) % 2]
    cfg = ScenarioConfig(num_ans=M, num_ues=K, antennas_per_an=L, target_snr_db=snr_db, base_seed=seed)
    gains = compute_gain_matrix(generate_topology(cfg, index), cfg).gains
    return gains, L, cached_power(cfg).per_an_power_linear


def run_verification(seed: int = 0, instances: int = 100, tol: float = 1e-6,
                     time_limit: float | None = None) -> VerifyReport:
    t0 = time.perf_counter()
    matched, worst, failures = 0, 0.0, []
    for i in range(instances):
        gains, L, p = suite_instance(seed, i)
        rep = verify_equivalence(gains, L, p, BnBConfig(time_limit=time_limit, log_every=10**9), tol=tol)
        worst = max(worst, rep.rel_gap)
        if rep.matched:
            matched += 1
        else:
            failures.append(i)
    return VerifyReport(instances, matched, worst, failures, time.perf_counter() - t0)
