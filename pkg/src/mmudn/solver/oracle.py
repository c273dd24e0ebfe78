"""Exhaustive enumeration oracle and MILP-vs-oracle equivalence check."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..milp import build_milp, choose_big_m
from ..sinr import Association, _gain_array, evaluate
from .bnb import BnBConfig, SolveResult, solve_milp

ENUMERATION_LIMIT = 10**8
CHUNK = 1 << 16


class TooLargeError(ValueError):
    """The instance exceeds the enumeration limit."""


def _min_sinr_batch(S: np.ndarray, P: np.ndarray, L: int) -> np.ndarray:
    """Min effective SINR of each serving vector (rows of ``S``); -inf when overloaded."""
    N, K = S.shape
    M = P.shape[1]
    onehot = S[:, :, None] == np.arange(M)
    loads = onehot.sum(axis=1)
    active = (loads > 0).astype(float)
    kk = np.arange(K)
    rx = P[kk, S]  # (N, K)
    interference = active @ P.T - rx
    s = np.take_along_axis(loads, S, axis=1)
    sinr = (L - s + 1) / s * rx / (1.0 + interference)
    out = sinr.min(axis=1)
    out[(loads > L + 1).any(axis=1)] = -np.inf
    return out


def brute_force_maxmin(gains, L: int, p: float, limit: int = ENUMERATION_LIMIT) -> tuple[float, Association]:
    """Max-min effective SINR by enumerating all ``M**K`` serving vectors.

    Ties go to the lexicographically smallest serving vector. Raises
    TooLargeError instead of truncating the enumeration.
    """
    g = _gain_array(gains)
    K, M = g.shape
    total = M**K
    if total > limit:
        raise TooLargeError(f"{M}^{K} = {total} serving vectors exceed the enumeration limit {limit}")
    P = p * g
    weights = M ** np.arange(K - 1, -1, -1, dtype=np.int64)
    best_val, best_idx = -math.inf, -1
    for start in range(0, total, CHUNK):
        idx = np.arange(start, min(start + CHUNK, total), dtype=np.int64)
        S = (idx[:, None] // weights) % M
        vals = _min_sinr_batch(S, P, L)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_idx = float(vals[i]), int(idx[i])
    serving = tuple(int(d) for d in (best_idx // weights) % M)
    return best_val, Association(serving, M)


@dataclass
class EquivalenceReport:
    theta_milp: float
    theta_bf: float
    rel_gap: float
    milp_status: str
    milp_incumbent_ok: bool
    bf_incumbent_ok: bool
    milp: SolveResult
    bf_association: Association

    @property
    def matched(self) -> bool:
        return self.milp_status == "optimal" and self.milp_incumbent_ok and self.bf_incumbent_ok


def verify_equivalence(gains, L: int, p: float, bnb_config: BnBConfig | None = None,
                       tol: float = 1e-6, big_m_rule: str = "bottleneck") -> EquivalenceReport:
    """Solve one instance with both the MILP and the oracle and compare."""
    g = _gain_array(gains)
    Q = choose_big_m(g, L, p, big_m_rule)
    res = solve_milp(build_milp(g, L, p, Q), bnb_config)
    theta_bf, assoc_bf = brute_force_maxmin(g, L, p)
    rel = abs(res.theta_star - theta_bf) / (1 + abs(theta_bf))

    def achieves(assoc, theta):
        if assoc is None:
            return False
        v = evaluate(assoc, g, L, p).min_sinr
        return v >= theta - tol * (1 + abs(theta))

    return EquivalenceReport(
        res.theta_star, theta_bf, rel, res.status,
        achieves(res.incumbent, res.theta_star) and rel <= tol,
        achieves(assoc_bf, theta_bf),
        res, assoc_bf,
    )
