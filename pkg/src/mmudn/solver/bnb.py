"""Branch-and-bound over the LP relaxation of the association MILP.

Each node fixes a subset of binaries. Node bounds are tightened by
activity-based propagation over all rows, fixed columns are folded into the
right-hand side and the reduced LP is solved with ``theta`` bounded below by
the incumbent (a cutoff). Incumbents come from integral LP points and from
rounding the fractional association (row argmax) followed by single-UE
moves, always re-scored with the exact SINR evaluator; the search starts
from the max-received-power association. Branching prefers fractional
``alpha``/``rho`` columns over the product variables.
"""

from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..milp import MilpModel, extract_association, lift_association
from ..sinr import Association, baseline_association, evaluate
from .lp import INFEASIBLE, OPTIMAL, LpProblem, solve_lp, solve_lp_highs
from .search import local_search

logger = logging.getLogger(__name__)

STATUS_OPTIMAL = "optimal"
STATUS_FEASIBLE = "feasible"  # a limit was hit; incumbent and gap reported
STATUS_INFEASIBLE = "infeasible"

# dense tableau entries above which "auto" hands node LPs to HiGHS
DENSE_LIMIT = 400_000


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class BnBConfig:
    int_tol: float = 1e-6
    rel_gap: float = 1e-9
    node_limit: int = 10_000_000
    time_limit: float | None = None
    node_selection: str = "best-bound"  # or "depth-first"
    branching: str = "most-fractional"  # or "lowest-index"
    lp_backend: str = "auto"  # "simplex", "highs" or "auto"
    warm_start: bool = True
    rounding: bool = True
    local_search: bool = True  # polish heuristic incumbents with single-UE moves
    branch_priority: bool = True  # branch on alpha/rho before auxiliary binaries
    log_every: int = 1000

    def __post_init__(self):
        if self.int_tol <= 0 or self.rel_gap <= 0:
            raise ValueError("tolerances must be positive")
        if self.node_limit <= 0 or (self.time_limit is not None and self.time_limit <= 0):
            raise ValueError("limits must be positive")
        if self.node_selection not in ("best-bound", "depth-first"):
            raise ValueError(f"unknown node selection {self.node_selection!r}")
        if self.branching not in ("most-fractional", "lowest-index"):
            raise ValueError(f"unknown branching rule {self.branching!r}")
        if self.lp_backend not in ("auto", "simplex", "highs"):
            raise ValueError(f"unknown LP backend {self.lp_backend!r}")


@dataclass
class SolveResult:
    status: str
    theta_star: float
    incumbent: Association | None
    best_bound: float
    nodes_explored: int = 0
    lp_iterations: int = 0
    wall_time: float = 0.0
    root_bound: float = math.nan
    bound_history: list = field(default_factory=list, repr=False)
    incumbent_history: list = field(default_factory=list, repr=False)

    @property
    def gap(self) -> float:
        if self.incumbent is None:
            return math.inf
        return max(0.0, self.best_bound - self.theta_star) / max(abs(self.best_bound), 1e-300)

    def csv_row(self) -> list[str]:
        """status, theta_star, best_bound, gap, nodes, lp_iterations, seconds."""
        return [
            self.status, f"{self.theta_star:.6g}", f"{self.best_bound:.6g}", f"{self.gap:.6g}",
            str(self.nodes_explored), str(self.lp_iterations), f"{self.wall_time:.6g}",
        ]


def _leq(a: float, b: float, tol: float) -> bool:
    return a <= b + tol * (1 + abs(b))


class _Propagator:
    """Activity-based bound propagation over all rows.

    Binary bounds are rounded; continuous bounds are only moved when the
    change is material, which keeps the number of passes small.
    """

    def __init__(self, model: MilpModel):
        A = model.A.tocsr()
        senses = model.senses
        # every row as one or two "<=" rows
        le = senses != ">="
        ge = senses != "<="
        G = sp.vstack([A[le], -A[ge]]).tocoo()
        self.h = np.concatenate([model.rhs[le], -model.rhs[ge]])
        self.rows, self.cols, self.a = G.row, G.col, G.data
        self.nrows = G.shape[0]
        self.binary = model.integrality
        self.pos = self.a > 0

    def run(self, lb, ub, passes: int = 10) -> bool:
        """Tighten ``lb``/``ub`` in place; returns False if the box is proven empty."""
        r, c, a, h, pos = self.rows, self.cols, self.a, self.h, self.pos
        binary = self.binary
        for _ in range(passes):
            lbc, ubc = lb[c], ub[c]
            at_min = np.where(pos, lbc, ubc)
            inf = ~np.isfinite(at_min)
            contrib = np.where(inf, 0.0, a * np.where(inf, 0.0, at_min))
            minact = np.bincount(r, contrib, self.nrows)
            ninf = np.bincount(r, inf, self.nrows)
            tol = 1e-9 * (1 + np.abs(h))
            if np.any((ninf == 0) & (minact > h + tol)):
                return False
            ok = (ninf[r] - inf) == 0
            if not ok.any():
                return True
            resid = h[r] - (minact[r] - contrib)
            with np.errstate(divide="ignore", invalid="ignore"):
                bound = resid / a
            new_ub = np.full(len(lb), np.inf)
            new_lb = np.full(len(lb), -np.inf)
            sel_u = ok & pos
            sel_l = ok & ~pos
            np.minimum.at(new_ub, c[sel_u], bound[sel_u])
            np.maximum.at(new_lb, c[sel_l], bound[sel_l])
            new_ub = np.where(binary, np.floor(new_ub + 1e-9), new_ub)
            new_lb = np.where(binary, np.ceil(new_lb - 1e-9), new_lb)
            span = np.where(np.isfinite(ub - lb), ub - lb, np.abs(np.where(np.isfinite(lb), lb, 0)) + 1.0)
            thresh = np.where(binary, 0.5, 1e-3 * (1 + span))
            tighter_u = new_ub < ub - thresh
            tighter_l = new_lb > lb + thresh
            if not (tighter_u.any() or tighter_l.any()):
                return True
            feas_tol = 1e-9 * (1 + np.abs(lb) + np.abs(np.where(np.isfinite(ub), ub, 0)))
            if np.any(new_ub < lb - feas_tol) or np.any(new_lb > ub + feas_tol):
                return False
            ub[tighter_u] = np.maximum(new_ub[tighter_u], lb[tighter_u])
            lb[tighter_l] = np.minimum(new_lb[tighter_l], ub[tighter_l])
        return True


class BranchAndBound:
    def __init__(self, model: MilpModel, config: BnBConfig | None = None):
        self.model = model
        self.cfg = config or BnBConfig()
        self.prop = _Propagator(model)
        self.A = model.A.tocsc()
        self.senses = np.asarray(model.senses)
        self.binary = model.integrality
        self.alpha = model.catalog.alpha
        self.primary = np.zeros(model.num_vars, dtype=bool)
        self.primary[model.catalog.alpha.ravel()] = True
        self.primary[model.catalog.rho] = True
        self.theta = model.catalog.theta
        self.lp_iterations = 0
        self.incumbent: Association | None = None
        self.incumbent_x = None
        self.incumbent_value = -math.inf
        self.incumbent_history: list[float] = []
        self.backend = self.cfg.lp_backend
        if self.backend == "auto":
            n_slack = int(np.sum(self.senses != "="))
            dense = model.num_rows * (model.num_vars + n_slack)
            self.backend = "simplex" if dense <= DENSE_LIMIT else "highs"

    # -- incumbent handling -------------------------------------------------
    def offer(self, association: Association, source: str) -> bool:
        m = self.model
        if self.cfg.local_search and source != "integral LP":
            serving, _ = local_search(association.serving_an, m.p * m.gains, m.L)
            association = Association(tuple(int(s) for s in serving), m.catalog.M)
        report = evaluate(association, m.gains, m.L, m.p)
        if not report.feasible:
            return False
        value = min(report.min_sinr, m.Q)
        if value > self.incumbent_value:
            self.incumbent = association
            self.incumbent_value = value
            self.incumbent_x = lift_association(association, m.gains, m.L, m.p, max(m.Q, report.min_sinr))
            self.incumbent_history.append(value)
            logger.debug("new incumbent %.9g from %s", value, source)
            return True
        return False

    def _round(self, x) -> Association:
        a = x[self.alpha]
        return Association(tuple(np.argmax(a, axis=1)), self.model.catalog.M)

    # -- node LP ------------------------------------------------------------
    def cutoff(self) -> float:
        """Lower bound on theta for any strictly better solution."""
        inc = self.incumbent_value
        return inc + self.cfg.rel_gap * (1 + abs(inc)) if self.incumbent is not None else 0.0

    def node_lp(self, lb, ub, use_cutoff: bool = True):
        m = self.model
        if use_cutoff:
            lb[self.theta] = max(lb[self.theta], self.cutoff())
        if lb[self.theta] > ub[self.theta]:
            return None, -math.inf, 0
        fixed = lb == ub
        free = ~fixed
        x = np.where(fixed, lb, 0.0)
        rhs = m.rhs - self.A[:, fixed] @ lb[fixed]
        Af = self.A[:, free].tocsr()
        nnz_rows = np.diff(Af.indptr) > 0
        # rows without free columns must already hold
        empty = ~nnz_rows
        tol = 1e-9 * (1 + np.abs(m.rhs[empty]))
        s, r = self.senses[empty], rhs[empty]
        if np.any(((s == "<=") & (r < -tol)) | ((s == ">=") & (r > tol)) | ((s == "=") & (np.abs(r) > tol))):
            return None, -math.inf, 0
        Af = Af[nnz_rows]
        args = (m.c[free], Af, self.senses[nnz_rows], rhs[nnz_rows], lb[free], ub[free])
        if self.backend == "simplex":
            sol = solve_lp(LpProblem(*args))
        else:
            sol = solve_lp_highs(*args)
        self.lp_iterations += sol.iterations
        if sol.status == INFEASIBLE:
            return None, -math.inf, sol.iterations
        if sol.status != OPTIMAL:
            raise SolverError(f"node LP failed: {sol.status} {sol.message}")
        x[free] = sol.x
        return x, float(m.c @ x), sol.iterations

    def _branch_var(self, x) -> int:
        frac = np.abs(x - np.round(x))
        fractional = self.binary & (frac > self.cfg.int_tol)
        cand = np.flatnonzero(fractional & self.primary) if self.cfg.branch_priority else []
        if len(cand) == 0:
            cand = np.flatnonzero(fractional)
        if len(cand) == 0:
            return -1
        if self.cfg.branching == "lowest-index":
            return int(cand[0])
        dist = np.abs(x[cand] - 0.5)
        return int(cand[np.argmin(dist)])  # argmin picks the lowest index on ties

    # -- main loop ----------------------------------------------------------
    def solve(self) -> SolveResult:
        cfg, m = self.cfg, self.model
        t0 = time.perf_counter()
        if cfg.warm_start:
            self.offer(baseline_association(m.gains), "baseline")

        lb0, ub0 = m.lb.copy(), m.ub.copy()
        nodes = 0
        counter = 0
        open_nodes: list = []
        bound_history: list[float] = []
        root_bound = math.nan
        status = STATUS_OPTIMAL
        gap = cfg.rel_gap

        def push(bound, lb, ub):
            nonlocal counter
            key = -bound if cfg.node_selection == "best-bound" else -counter
            heapq.heappush(open_nodes, (key, counter, bound, lb, ub))
            counter += 1

        if self.prop.run(lb0, ub0):
            push(math.inf, lb0, ub0)
        best_bound = math.inf
        while open_nodes:
            if nodes >= cfg.node_limit or (cfg.time_limit is not None and time.perf_counter() - t0 > cfg.time_limit):
                status = STATUS_FEASIBLE
                break
            _, _, parent_bound, lb, ub = heapq.heappop(open_nodes)
            if cfg.node_selection == "best-bound":
                # global bound: the popped node carries the largest open bound
                best_bound = min(best_bound, max(parent_bound, self.incumbent_value))
                bound_history.append(best_bound)
            if self.incumbent is not None and _leq(parent_bound, self.incumbent_value, gap):
                continue
            nodes += 1
            # the root is solved without the incumbent cutoff so that it reports the plain LP bound
            x, bound, _ = self.node_lp(lb, ub, use_cutoff=nodes > 1)
            if nodes == 1:
                root_bound = bound
            if x is None:
                continue
            if self.incumbent is not None and _leq(bound, self.incumbent_value, gap):
                continue
            j = self._branch_var(x)
            if j < 0:
                self.offer(extract_association(x, m.catalog, cfg.int_tol), "integral LP")
                continue
            if cfg.rounding:
                self.offer(self._round(x), "rounding")
                if _leq(bound, self.incumbent_value, gap):
                    continue
            children = []
            for val in (0.0, 1.0):
                clb, cub = lb.copy(), ub.copy()
                clb[j] = cub[j] = val
                clb[self.theta] = max(clb[self.theta], self.cutoff())
                if clb[self.theta] <= cub[self.theta] and self.prop.run(clb, cub):
                    children.append((val, clb, cub))
            if cfg.node_selection == "depth-first":
                # explore the side nearer to the LP value first (pushed last)
                children.sort(key=lambda ch: -abs(ch[0] - x[j]))
            for _, clb, cub in children:
                push(bound, clb, cub)
            if nodes % cfg.log_every == 0:
                open_bound = max((n[2] for n in open_nodes), default=-math.inf)
                logger.info(
                    "nodes %d open %d bound %.6g incumbent %.6g gap %.3g",
                    nodes, len(open_nodes), open_bound, self.incumbent_value,
                    (open_bound - self.incumbent_value) / max(abs(open_bound), 1e-300),
                )

        if status == STATUS_OPTIMAL:
            best_bound = self.incumbent_value
        else:
            open_bound = max((n[2] for n in open_nodes), default=-math.inf)
            best_bound = min(best_bound, max(open_bound, self.incumbent_value))
        bound_history.append(best_bound)
        if self.incumbent is None:
            status = STATUS_INFEASIBLE if status == STATUS_OPTIMAL else status
        return SolveResult(
            status,
            self.incumbent_value,
            self.incumbent,
            best_bound,
            nodes,
            self.lp_iterations,
            time.perf_counter() - t0,
            root_bound,
            bound_history,
            self.incumbent_history,
        )


def solve_milp(model: MilpModel, config: BnBConfig | None = None) -> SolveResult:
    return BranchAndBound(model, config).solve()
