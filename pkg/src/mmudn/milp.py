"""Exact mixed-integer linear model of the max-min effective-SINR association.

The fractional SINR constraint ``gamma_km >= alpha_km * theta`` is cleared of
its denominator and every product is replaced by an auxiliary variable:

* ``z[i,m,j] = alpha[i,m] * rho[j]``      (binary x binary)
* ``v[i,m,k] = alpha[i,m] * alpha[k,m]``  (binary x binary)
* ``u[i,m,j,k] = z[i,m,j] * alpha[k,m]``  (binary x binary)
* ``w[i,m,k] = v[i,m,k] * theta``         (binary x continuous, big-M ``Q``)
* ``n[i,m,j,k] = u[i,m,j,k] * theta``     (binary x continuous, big-M ``Q``)

leaving one linear "master" row per (UE, AN) pair::

    g[k,m] (L + 1 - sum_i alpha[i,m]) >= (1/p) sum_i w[i,m,k]
                                         + sum_i sum_{j != m} g[k,j] n[i,m,j,k]
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .sinr import Association, _gain_array, evaluate

LE, GE, EQ = "<=", ">=", "="

FAMILIES = ("assign", "activate", "z", "v", "u", "w", "n", "master")


class ModelError(ValueError):
    pass


def _others(M: int) -> np.ndarray:
    """``others[m]`` lists every AN except ``m`` in increasing order, shape (M, M-1)."""
    return np.array([[j for j in range(M) if j != m] for m in range(M)], dtype=int).reshape(M, M - 1)


@dataclass(frozen=True)
class VarCatalog:
    """Column layout of the model.

    Index arrays hold column numbers; ``z``, ``u`` and ``n`` use ``-1`` on the
    ``j == m`` diagonal, which has no variable.
    """

    K: int
    M: int
    alpha: np.ndarray  # (K, M)
    rho: np.ndarray  # (M,)
    z: np.ndarray  # (K, M, M)
    v: np.ndarray  # (K, M, K)
    u: np.ndarray  # (K, M, M, K)
    w: np.ndarray  # (K, M, K)
    n: np.ndarray  # (K, M, M, K)
    theta: int
    num_vars: int
    num_binary: int
    names: list = field(repr=False)

    @classmethod
    def build(cls, K: int, M: int) -> "VarCatalog":
        if K < 1 or M < 1:
            raise ModelError("need at least one UE and one AN")
        nxt = 0
        names: list[str] = []

        def take(shape, fmt, mask=None):
            nonlocal nxt
            idx = np.full(shape, -1, dtype=int)
            for pos in np.ndindex(*shape):
                if mask is not None and not mask(pos):
                    continue
                idx[pos] = nxt
                names.append(fmt.format(*pos))
                nxt += 1
            return idx

        off_diag = lambda pos: pos[1] != pos[2]  # noqa: E731  (i, m, j, ...)
        alpha = take((K, M), "a_{}_{}")
        rho = take((M,), "rho_{}")
        z = take((K, M, M), "z_{}_{}_{}", off_diag)
        v = take((K, M, K), "v_{}_{}_{}")
        u = take((K, M, M, K), "u_{}_{}_{}_{}", off_diag)
        num_binary = nxt
        w = take((K, M, K), "w_{}_{}_{}")
        n = take((K, M, M, K), "n_{}_{}_{}_{}", off_diag)
        theta = nxt
        names.append("theta")
        nxt += 1
        return cls(K, M, alpha, rho, z, v, u, w, n, theta, nxt, num_binary, names)

    @property
    def num_continuous(self) -> int:
        return self.num_vars - self.num_binary

    @property
    def binary_mask(self) -> np.ndarray:
        mask = np.zeros(self.num_vars, dtype=bool)
        mask[: self.num_binary] = True
        return mask

    @staticmethod
    def expected_counts(K: int, M: int) -> dict[str, int]:
        """Closed-form variable and row counts."""
        bins = K * M + M + K * M * (M - 1) + K * K * M + K * K * M * (M - 1)
        cont = K * K * M + K * K * M * (M - 1) + 1
        rows = {
            "assign": K,
            "activate": K * M,
            "z": 3 * K * M * (M - 1),
            "v": 3 * K * K * M,
            "u": 3 * K * K * M * (M - 1),
            "w": 3 * K * K * M,
            "n": 3 * K * K * M * (M - 1),
            "master": K * M,
        }
        return {"binary": bins, "continuous": cont, "rows": sum(rows.values()), **{f"rows_{k}": v for k, v in rows.items()}}


@dataclass(frozen=True)
class MilpModel:
    """``maximize c @ x`` subject to ``A x (senses) b``, ``lb <= x <= ub``, binaries integral.

    ``w >= 0`` and ``n >= 0`` are carried as variable lower bounds, ``theta``
    lives in ``[0, Q]``.
    """

    catalog: VarCatalog
    A: sp.csr_matrix
    senses: np.ndarray  # dtype '<U2'
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    c: np.ndarray
    row_family: np.ndarray
    row_names: list
    gains: np.ndarray
    L: int
    p: float
    Q: float

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    @property
    def num_vars(self) -> int:
        return self.A.shape[1]

    @property
    def integrality(self) -> np.ndarray:
        return self.catalog.binary_mask

    def family_counts(self) -> dict[str, int]:
        fam, cnt = np.unique(self.row_family, return_counts=True)
        out = dict.fromkeys(FAMILIES, 0)
        out.update(zip(fam.tolist(), cnt.tolist()))
        return out

    def rows(self):
        """Yield ``(name, [(col, coef), ...], sense, rhs)`` for every constraint."""
        A = self.A
        for r in range(self.num_rows):
            lo, hi = A.indptr[r], A.indptr[r + 1]
            yield self.row_names[r], list(zip(A.indices[lo:hi].tolist(), A.data[lo:hi].tolist())), str(self.senses[r]), float(self.rhs[r])

    def violations(self, x, tol: float = 1e-7) -> list[tuple[str, float]]:
        """Rows and bounds violated by ``x`` beyond ``tol * (1 + |rhs|)``."""
        x = np.asarray(x, dtype=float)
        act = self.A @ x
        out = []
        for r, (a, s, b) in enumerate(zip(act, self.senses, self.rhs)):
            t = tol * (1 + abs(b))
            bad = (s == LE and a > b + t) or (s == GE and a < b - t) or (s == EQ and abs(a - b) > t)
            if bad:
                out.append((self.row_names[r], float(a - b)))
        for j in np.flatnonzero((x < self.lb - tol * (1 + abs(self.lb))) | (x > self.ub + tol * (1 + abs(self.ub)))):
            out.append((self.catalog.names[j], float(x[j])))
        ints = self.catalog.binary_mask
        for j in np.flatnonzero(ints & (np.abs(x - np.round(x)) > tol)):
            out.append((self.catalog.names[j] + ":integrality", float(x[j])))
        return out

    def stats_row(self) -> list:
        """CSV row: K, M, n_bin, n_cont, n_rows."""
        cat = self.catalog
        return [cat.K, cat.M, cat.num_binary, cat.num_continuous, self.num_rows]


def choose_big_m(gains, L: int, p: float, rule: str = "global") -> float:
    """Big-M constant bounding the guaranteed SINR ``theta``.

    ``"global"``: ``L p max g``, which bounds every UE's achievable SINR.
    ``"bottleneck"``: ``L p min_k max_m g[k, m]``; every UE's SINR is at most
    ``L p max_m g[k, m]``, so the guaranteed level cannot exceed the smallest
    of those. Both are valid for the model since ``Q`` only bounds ``theta``.
    """
    g = _gain_array(gains)
    if L < 1 or p <= 0 or np.any(g <= 0):
        raise ModelError("choose_big_m needs positive inputs")
    if rule == "global":
        return float(L * p * g.max())
    if rule == "bottleneck":
        return float(L * p * g.max(axis=1).min())
    raise ModelError(f"unknown big-M rule {rule!r}")


class _RowBuilder:
    def __init__(self):
        self.ri: list[np.ndarray] = []
        self.ci: list[np.ndarray] = []
        self.vals: list[np.ndarray] = []
        self.senses: list[np.ndarray] = []
        self.rhs: list[np.ndarray] = []
        self.family: list[np.ndarray] = []
        self.names: list[str] = []
        self.nrows = 0

    def add(self, family, sense, rhs, terms, names):
        """Add a block of rows; ``terms`` is a list of ``(cols, coefs)`` with cols shaped (nrows, ...)."""
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        nb = len(names)
        if nb == 0:
            return
        rows = self.nrows + np.arange(nb)
        for cols, coefs in terms:
            cols = np.asarray(cols).reshape(nb, -1)
            coefs = np.broadcast_to(np.asarray(coefs, dtype=float).reshape(nb, -1) if np.ndim(coefs) else coefs, cols.shape)
            keep = cols >= 0
            self.ri.append(np.broadcast_to(rows[:, None], cols.shape)[keep])
            self.ci.append(cols[keep])
            self.vals.append(coefs[keep])
        self.senses.append(np.full(nb, sense))
        self.rhs.append(np.broadcast_to(rhs, (nb,)).copy())
        self.family.append(np.full(nb, family, dtype=object))
        self.names.extend(names)
        self.nrows += nb

    def matrix(self, ncols):
        ri = np.concatenate(self.ri) if self.ri else np.zeros(0, int)
        A = sp.coo_matrix(
            (np.concatenate(self.vals), (ri, np.concatenate(self.ci))), shape=(self.nrows, ncols)
        ).tocsr()
        A.sum_duplicates()
        A.eliminate_zeros()
        return A


def build_milp(gains, L: int, p: float, Q: float) -> MilpModel:
    g = _gain_array(gains)
    K, M = g.shape
    if L < 1 or p <= 0 or not math.isfinite(Q) or Q <= 0:
        raise ModelError("build_milp needs L >= 1, p > 0 and a finite Q > 0")
    if np.any(~np.isfinite(g)) or np.any(g <= 0):
        raise ModelError("gains must be finite and positive")
    cat = VarCatalog.build(K, M)
    rb = _RowBuilder()
    oth = _others(M)  # (M, M-1)
    iK, iM = np.arange(K), np.arange(M)

    # one serving AN per UE
    rb.add("assign", EQ, 1.0, [(cat.alpha, 1.0)], [f"assign_{k}" for k in iK])
    # alpha_km <= rho_m
    rb.add(
        "activate", LE, 0.0,
        [(cat.alpha.reshape(-1), 1.0), (np.broadcast_to(cat.rho, (K, M)).reshape(-1), -1.0)],
        [f"active_{k}_{m}" for k in iK for m in iM],
    )

    def product_rows(family, out_idx, x_idx, y_idx, labels):
        # out = x*y for binaries: out <= x, out <= y, out >= x + y - 1
        out_idx, x_idx, y_idx = (a.reshape(-1) for a in (out_idx, x_idx, y_idx))
        rb.add(family, LE, 0.0, [(out_idx, 1.0), (x_idx, -1.0)], [f"{family}x_{s}" for s in labels])
        rb.add(family, LE, 0.0, [(out_idx, 1.0), (y_idx, -1.0)], [f"{family}y_{s}" for s in labels])
        rb.add(family, GE, -1.0, [(out_idx, 1.0), (x_idx, -1.0), (y_idx, -1.0)], [f"{family}xy_{s}" for s in labels])

    def bigm_rows(family, out_idx, bin_idx, labels):
        # out = bin*theta: out <= Q bin, out <= theta, out >= theta - (1 - bin) Q
        out_idx, bin_idx = out_idx.reshape(-1), bin_idx.reshape(-1)
        th = np.full(out_idx.shape, cat.theta)
        rb.add(family, LE, 0.0, [(out_idx, 1.0), (bin_idx, -Q)], [f"{family}q_{s}" for s in labels])
        rb.add(family, LE, 0.0, [(out_idx, 1.0), (th, -1.0)], [f"{family}t_{s}" for s in labels])
        rb.add(family, GE, -Q, [(out_idx, 1.0), (th, -1.0), (bin_idx, -Q)], [f"{family}m_{s}" for s in labels])

    # z_imj = alpha_im * rho_j, j != m
    I, Mm, J = np.meshgrid(iK, iM, np.arange(M - 1), indexing="ij")
    Jfull = oth[Mm, J] if M > 1 else J
    lab = [f"{i}_{m}_{j}" for i, m, j in zip(I.ravel(), Mm.ravel(), Jfull.ravel())] if M > 1 else []
    if M > 1:
        product_rows("z", cat.z[I, Mm, Jfull], cat.alpha[I, Mm], cat.rho[Jfull], lab)

    # v_imk = alpha_im * alpha_km
    I2, M2, K2 = np.meshgrid(iK, iM, iK, indexing="ij")
    lab8 = [f"{i}_{m}_{k}" for i, m, k in zip(I2.ravel(), M2.ravel(), K2.ravel())]
    product_rows("v", cat.v[I2, M2, K2], cat.alpha[I2, M2], cat.alpha[K2, M2], lab8)

    # u_imjk = z_imj * alpha_km
    if M > 1:
        I3, M3, J3, K3 = np.meshgrid(iK, iM, np.arange(M - 1), iK, indexing="ij")
        J3 = oth[M3, J3]
        lab9 = [f"{i}_{m}_{j}_{k}" for i, m, j, k in zip(I3.ravel(), M3.ravel(), J3.ravel(), K3.ravel())]
        product_rows("u", cat.u[I3, M3, J3, K3], cat.z[I3, M3, J3], cat.alpha[K3, M3], lab9)

    # w = v * theta, n = u * theta
    bigm_rows("w", cat.w[I2, M2, K2], cat.v[I2, M2, K2], lab8)
    if M > 1:
        bigm_rows("n", cat.n[I3, M3, J3, K3], cat.u[I3, M3, J3, K3], lab9)

    # master rows, written as
    # g_km sum_i alpha_im + (1/p) sum_i w_imk + sum_i sum_j g_kj n_imjk <= g_km (L + 1)
    names, rhs = [], []
    ri, ci, vals = [], [], []
    for k in iK:
        for m in iM:
            cols = [cat.alpha[:, m], cat.w[:, m, k]]
            coefs = [np.full(K, g[k, m]), np.full(K, 1.0 / p)]
            for j in oth[m] if M > 1 else ():
                cols.append(cat.n[:, m, j, k])
                coefs.append(np.full(K, g[k, j]))
            ci.append(np.concatenate(cols))
            vals.append(np.concatenate(coefs))
            names.append(f"master_{k}_{m}")
            rhs.append(g[k, m] * (L + 1))
    rb.add("master", LE, rhs, [(np.array(ci), np.array(vals))], names)

    A = rb.matrix(cat.num_vars)
    lb = np.zeros(cat.num_vars)
    ub = np.full(cat.num_vars, np.inf)
    ub[: cat.num_binary] = 1.0
    ub[cat.theta] = Q
    c = np.zeros(cat.num_vars)
    c[cat.theta] = 1.0
    return MilpModel(
        cat, A, np.concatenate(rb.senses), np.concatenate(rb.rhs), lb, ub, c,
        np.concatenate(rb.family), rb.names, g, int(L), float(p), float(Q),
    )


def lift_association(association: Association, gains, L: int, p: float, Q: float) -> np.ndarray:
    """Full variable vector of ``association`` with ``theta`` = its min SINR."""
    g = _gain_array(gains)
    K, M = g.shape
    if (association.num_ues, association.num_ans) != (K, M):
        raise ModelError("association does not match the gain matrix")
    report = evaluate(association, g, L, p)
    if not report.feasible:
        raise ModelError("association overloads an AN beyond L + 1 UEs")
    theta = report.min_sinr
    if theta > Q * (1 + 1e-12):
        raise ModelError(f"min SINR {theta:g} exceeds big-M {Q:g}")
    theta = min(theta, Q)
    cat = VarCatalog.build(K, M)
    x = np.zeros(cat.num_vars)
    a = association.indicator()
    rho = association.active.astype(float)
    x[cat.alpha] = a
    x[cat.rho] = rho
    zfull = a[:, :, None] * rho[None, None, :]
    vfull = a[:, :, None] * a.T[None, :, :]
    ufull = zfull[:, :, :, None] * a.T[None, :, None, :]
    mz, mu = cat.z >= 0, cat.u >= 0
    x[cat.z[mz]] = zfull[mz]
    x[cat.v] = vfull
    x[cat.u[mu]] = ufull[mu]
    x[cat.w] = vfull * theta
    x[cat.n[mu]] = ufull[mu] * theta
    x[cat.theta] = theta
    return x


def extract_association(solution, catalog: VarCatalog, tol: float = 1e-6) -> Association:
    """Serving AN per UE from the ``alpha`` block of an integral solution."""
    x = np.asarray(solution, dtype=float)
    a = x[catalog.alpha]
    hi = a >= 1 - tol
    lo = a <= tol
    if not np.all(hi | lo):
        k, m = np.argwhere(~(hi | lo))[0]
        raise ModelError(f"alpha[{k},{m}] = {a[k, m]:.9g} is not integral within {tol:g}")
    per_ue = hi.sum(axis=1)
    if np.any(per_ue != 1):
        k = int(np.flatnonzero(per_ue != 1)[0])
        raise ModelError(f"UE {k} has {per_ue[k]} serving ANs")
    return Association(tuple(np.argmax(hi, axis=1)), catalog.M)


# ---------------------------------------------------------------------------
# CPLEX LP text format

def _fmt(v: float) -> str:
    return repr(float(v))


def _expr(terms, names) -> list[str]:
    out = []
    for j, c in terms:
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        out.append(f"{sign} {names[j]}" if mag == 1 else f"{sign} {_fmt(mag)} {names[j]}")
    if out and out[0].startswith("+ "):
        out[0] = out[0][2:]
    return out or ["0 " + names[0]]


def _wrap(tokens: list[str], indent: str = "   ", width: int = 200) -> list[str]:
    lines, cur = [], ""
    for t in tokens:
        if cur and len(cur) + len(t) + 1 > width:
            lines.append(cur)
            cur = indent + t
        else:
            cur = f"{cur} {t}" if cur else t
    lines.append(cur)
    return lines


def lp_text(model: MilpModel) -> str:
    names = model.catalog.names
    lines = [
        f"\\ max-min effective SINR association, K={model.catalog.K} M={model.catalog.M} "
        f"L={model.L} p={_fmt(model.p)} Q={_fmt(model.Q)}",
        "Maximize",
    ]
    obj = [(j, c) for j, c in enumerate(model.c) if c != 0]
    lines += [" " + ln for ln in _wrap(["obj:"] + _expr(obj, names))]
    lines.append("Subject To")
    for name, terms, sense, rhs in model.rows():
        toks = [f"{name}:"] + _expr(terms, names) + [sense, _fmt(rhs)]
        lines += [" " + ln for ln in _wrap(toks)]
    lines.append("Bounds")
    bin_mask = model.integrality
    for j in range(model.num_vars):
        if bin_mask[j]:
            continue
        lo, hi = model.lb[j], model.ub[j]
        if lo == 0 and np.isinf(hi):
            continue
        lo_s = "-inf" if np.isinf(lo) else _fmt(lo)
        hi_s = "+inf" if np.isinf(hi) else _fmt(hi)
        lines.append(f" {lo_s} <= {names[j]} <= {hi_s}")
    lines.append("Binaries")
    lines += [" " + ln for ln in _wrap([names[j] for j in np.flatnonzero(bin_mask)], indent="")]
    lines.append("End")
    return "\n".join(lines) + "\n"


def export_lp(model: MilpModel, destination) -> str:
    """Write ``model`` in CPLEX LP format to a path or text stream; returns the text."""
    text = lp_text(model)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        Path(destination).write_text(text)
    return text
