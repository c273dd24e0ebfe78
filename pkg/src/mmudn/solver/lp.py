"""Linear programming: a dense bounded-variable primal simplex and a HiGHS adapter.

Problems are posed as ``maximize c @ x`` subject to ``A x (<=, >=, =) b`` and
``lb <= x <= ub``. The built-in engine runs a two-phase primal simplex on a
full tableau, keeping nonbasic variables at either bound, and falls back to
Bland's rule once the objective stalls.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ERROR = "error"

FEAS_TOL = 1e-7
OPT_TOL = 1e-7
PIVOT_TOL = 1e-9
DRIFT_TOL = 1e-9
REINVERT_EVERY = 100


@dataclass
class LpProblem:
    c: np.ndarray
    A: np.ndarray
    senses: list
    b: np.ndarray
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = len(self.c)
        self.A = self.A.toarray() if sp.issparse(self.A) else np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.senses = [str(s) for s in self.senses]
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float).copy()
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).copy()
        if self.A.shape != (len(self.b), n) or len(self.senses) != len(self.b):
            raise ValueError("inconsistent LP dimensions")
        if any(s not in ("<=", ">=", "=") for s in self.senses):
            raise ValueError("row senses must be '<=', '>=' or '='")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b)) and np.all(np.isfinite(self.c))):
            raise ValueError("LP data must be finite")

    @property
    def shape(self):
        return self.A.shape

    def residual(self, x) -> float:
        """Largest scaled row or bound violation of ``x``."""
        act = self.A @ x
        s = np.asarray(self.senses)
        scale = 1.0 + np.abs(self.b)
        viol = np.where(s == "<=", act - self.b, np.where(s == ">=", self.b - act, np.abs(act - self.b)))
        worst = float(np.max(np.maximum(viol, 0) / scale, initial=0.0))
        bviol = np.maximum(self.lb - x, x - self.ub) / (1.0 + np.abs(np.where(np.isfinite(self.ub), self.ub, 0)))
        return max(worst, float(np.max(np.maximum(bviol, 0), initial=0.0)))


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = float("nan")
    iterations: int = 0
    message: str = field(default="")

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    """Full tableau over nonnegative columns with upper bounds ``u`` (possibly inf)."""

    def __init__(self, T, rhs, u, basis, at_upper):
        self.T0 = T.copy()  # original columns, kept for reinversion
        self.b0 = rhs.copy()
        self.T = T  # (m, N) = B^-1 [A | I_art]
        self.beta = rhs  # current basic values
        self.u = u
        self.basis = basis
        self.at_upper = at_upper
        self.iterations = 0
        self.reinversions = 0

    def drift(self) -> float:
        """Scaled residual of the current basic solution against the original rows."""
        r = self.T0 @ self.values() - self.b0
        return float(np.max(np.abs(r) / (1.0 + np.abs(self.b0)), initial=0.0))

    def reinvert(self) -> bool:
        """Rebuild ``B^-1 A`` and the basic values from the original data."""
        B = self.T0[:, self.basis]
        x = np.where(self.at_upper, self.u, 0.0)
        x[self.basis] = 0.0
        try:
            self.T = np.linalg.solve(B, self.T0)
            self.beta = np.linalg.solve(B, self.b0 - self.T0 @ x)
        except np.linalg.LinAlgError:
            return False
        self.reinversions += 1
        return True

    def values(self) -> np.ndarray:
        x = np.where(self.at_upper, self.u, 0.0)
        x[self.basis] = self.beta
        return x

    def run(self, c, allowed, max_iter, stall_limit=50):
        """Maximize ``c`` over the current basis; returns OPTIMAL, UNBOUNDED or ERROR."""
        T, u = self.T, self.u
        m = T.shape[0]
        d = c - c[self.basis] @ T
        bland = False
        best_obj = -np.inf
        stall = 0
        clean = False  # no pivots since the last drift check
        while True:
            if self.iterations >= max_iter:
                return ERROR
            if self.iterations % REINVERT_EVERY == 0 and not clean:
                clean = True
                if self.drift() > DRIFT_TOL and self.reinvert():
                    d = c - c[self.basis] @ self.T
            is_basic = np.zeros(len(c), dtype=bool)
            is_basic[self.basis] = True
            up = (~self.at_upper) & (d > OPT_TOL)
            down = self.at_upper & (d < -OPT_TOL)
            cand = allowed & ~is_basic & (up | down)
            if not cand.any():
                if not clean and self.drift() > DRIFT_TOL and self.reinvert():
                    clean = True
                    d = c - c[self.basis] @ self.T
                    continue
                return OPTIMAL
            clean = False
            idx = np.flatnonzero(cand)
            q = int(idx[0]) if bland else int(idx[np.argmax(np.abs(d[idx]))])
            delta = -1.0 if self.at_upper[q] else 1.0
            T = self.T
            col = T[:, q] * delta
            # ratio test: basic i moves by -t*col[i]
            t_best = u[q]
            r_best = -1
            to_upper = False
            ub_basic = u[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                dec = col > PIVOT_TOL
                inc = (col < -PIVOT_TOL) & np.isfinite(ub_basic)
                lim = np.full(m, np.inf)
                lim[dec] = np.maximum(self.beta[dec], 0.0) / col[dec]
                lim[inc] = np.maximum(ub_basic[inc] - self.beta[inc], 0.0) / -col[inc]
            t_rows = lim.min() if m else np.inf
            if t_rows < t_best:
                ties = np.flatnonzero(lim <= t_rows + 1e-12 * (1 + t_rows))
                if bland:
                    r_best = int(ties[np.argmin(np.asarray(self.basis)[ties])])
                else:
                    r_best = int(ties[np.argmax(np.abs(col[ties]))])
                t_best = lim[r_best]
                to_upper = bool(inc[r_best])
            if not np.isfinite(t_best):
                return UNBOUNDED
            self.iterations += 1
            self.beta -= t_best * col
            if r_best < 0:
                self.at_upper[q] = not self.at_upper[q]
            else:
                leaving = self.basis[r_best]
                entering_val = (u[q] if self.at_upper[q] else 0.0) + delta * t_best
                piv = T[r_best, q]
                if abs(piv) < PIVOT_TOL:
                    return ERROR
                T[r_best] /= piv
                colq = T[:, q].copy()
                colq[r_best] = 0.0
                T -= np.outer(colq, T[r_best])
                d = d - d[q] * T[r_best]
                self.beta[r_best] = entering_val
                self.basis[r_best] = q
                self.at_upper[q] = False
                self.at_upper[leaving] = to_upper
            obj = float(c @ self.values())
            if obj > best_obj + 1e-12 * (1 + abs(best_obj)):
                best_obj = obj
                stall = 0
            else:
                stall += 1
                if stall >= stall_limit and not bland:
                    logger.debug("simplex stalled for %d iterations, switching to Bland's rule", stall)
                    bland = True


def solve_lp(problem: LpProblem, max_iter: int = 50_000) -> LpSolution:
    """Two-phase primal simplex on the bounded-variable standard form."""
    c, A, b = problem.c, problem.A, problem.b
    lb, ub = problem.lb, problem.ub
    m, n = A.shape
    if np.any(lb > ub + FEAS_TOL * (1 + np.abs(lb))):
        return LpSolution(INFEASIBLE, message="empty variable bounds")

    # x = offset + sum over y-columns with signs; every y >= 0
    signs, src, yub = [], [], []
    offset = np.zeros(n)
    for j in range(n):
        if np.isfinite(lb[j]):
            offset[j] = lb[j]
            src.append(j), signs.append(1.0), yub.append(ub[j] - lb[j])
        elif np.isfinite(ub[j]):
            offset[j] = ub[j]
            src.append(j), signs.append(-1.0), yub.append(np.inf)
        else:
            src += [j, j]
            signs += [1.0, -1.0]
            yub += [np.inf, np.inf]
    src = np.asarray(src, dtype=int)
    signs = np.asarray(signs)
    Ay = A[:, src] * signs
    cy = c[src] * signs
    by = b - A @ offset
    yub = np.maximum(np.asarray(yub, dtype=float), 0.0)
    ny = len(src)

    # slacks
    senses = np.asarray(problem.senses)
    slack_rows = np.flatnonzero(senses != "=")
    S = np.zeros((m, len(slack_rows)))
    S[slack_rows, np.arange(len(slack_rows))] = np.where(senses[slack_rows] == "<=", 1.0, -1.0)
    Afull = np.hstack([Ay, S])
    ufull = np.concatenate([yub, np.full(len(slack_rows), np.inf)])
    cfull = np.concatenate([cy, np.zeros(len(slack_rows))])

    # row equilibration and sign normalization
    scale = np.max(np.abs(Afull), axis=1, initial=0.0)
    scale[scale == 0] = 1.0
    Afull = Afull / scale[:, None]
    bfull = by / scale
    neg = bfull < 0
    Afull[neg] *= -1
    bfull[neg] *= -1

    N0 = Afull.shape[1]
    basis = np.full(m, -1, dtype=int)
    # reuse +unit slack columns as the starting basis where possible
    for r_i, r in enumerate(slack_rows):
        if Afull[r, ny + r_i] > 0:
            basis[r] = ny + r_i
    art_rows = np.flatnonzero(basis < 0)
    n_art = len(art_rows)
    art = np.zeros((m, n_art))
    art[art_rows, np.arange(n_art)] = 1.0
    T = np.hstack([Afull, art])
    basis[art_rows] = N0 + np.arange(n_art)
    u = np.concatenate([ufull, np.full(n_art, np.inf)])
    # basis columns are unit columns scaled by the slack coefficient
    for r in range(m):
        piv = T[r, basis[r]]
        if piv != 1.0:
            T[r] /= piv
            bfull[r] /= piv
    tab = _Tableau(T, bfull.copy(), u, basis, np.zeros(N0 + n_art, dtype=bool))
    allowed = np.ones(N0 + n_art, dtype=bool)

    if n_art:
        c1 = np.zeros(N0 + n_art)
        c1[N0:] = -1.0
        status = tab.run(c1, allowed, max_iter)
        if status == ERROR:
            return LpSolution(ERROR, iterations=tab.iterations, message="phase 1 breakdown or iteration limit")
        art_vals = tab.values()[N0:]
        if np.any(art_vals > FEAS_TOL * (1 + np.abs(bfull[art_rows]))):
            return LpSolution(INFEASIBLE, iterations=tab.iterations,
                              message=f"phase 1 residual {float(art_vals.sum()):.3g}")
        # drive remaining artificials out of the basis; redundant rows keep theirs, pinned at 0
        for r in range(m):
            if tab.basis[r] < N0:
                continue
            row = tab.T[r, :N0].copy()
            row[tab.basis[tab.basis < N0]] = 0.0
            cand = np.flatnonzero(np.abs(row) > 1e-9)
            if len(cand) == 0:
                continue
            q = int(cand[np.argmax(np.abs(row[cand]))])
            val = tab.u[q] if tab.at_upper[q] else 0.0
            tab.T[r] /= tab.T[r, q]
            colq = tab.T[:, q].copy()
            colq[r] = 0.0
            tab.T -= np.outer(colq, tab.T[r])
            tab.beta[r] = val
            tab.basis[r] = q
            tab.at_upper[q] = False
        tab.u[N0:] = 0.0
        allowed[N0:] = False
        cfull = np.concatenate([cfull, np.zeros(n_art)])

    status = tab.run(cfull, allowed, max_iter)
    if status != OPTIMAL:
        return LpSolution(status, iterations=tab.iterations)
    yfull = tab.values()
    y = yfull[:ny]
    x = offset.copy()
    np.add.at(x, src, signs * y)
    res = problem.residual(x)
    if res > 1e-6:
        return LpSolution(ERROR, x, float(c @ x), tab.iterations, f"residual {res:.3g} after simplex")
    return LpSolution(OPTIMAL, x, float(c @ x), tab.iterations)


def solve_lp_highs(c, A, senses, b, lb, ub) -> LpSolution:
    """Same contract as :func:`solve_lp` but backed by HiGHS (sparse ``A`` allowed)."""
    A = sp.csr_matrix(A)
    senses = np.asarray(senses)
    le = senses == "<="
    ge = senses == ">="
    eq = senses == "="
    A_ub = sp.vstack([A[le], -A[ge]]) if (le.any() or ge.any()) else None
    b_ub = np.concatenate([b[le], -b[ge]]) if A_ub is not None else None
    res = linprog(
        -np.asarray(c, dtype=float),
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A[eq] if eq.any() else None,
        b_eq=b[eq] if eq.any() else None,
        bounds=np.column_stack([lb, ub]),
        method="highs-ds",
    )
    nit = int(getattr(res, "nit", 0) or 0)
    if res.status == 0:
        return LpSolution(OPTIMAL, res.x, float(-res.fun), nit)
    if res.status == 2:
        return LpSolution(INFEASIBLE, iterations=nit, message=res.message)
    if res.status == 3:
        return LpSolution(UNBOUNDED, iterations=nit, message=res.message)
    return LpSolution(ERROR, iterations=nit, message=res.message)
