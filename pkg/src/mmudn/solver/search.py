"""Exact depth-first search over serving vectors for the max-min SINR association.

Used where the MILP is too large for the built-in LP engine. UEs are fixed
one at a time. Along a branch, loads and the active-AN set only grow, so:

* a fixed UE can never do better than its SINR under the current loads and
  active set;
* a free UE can never do better than its best AN with one more UE on it and
  interference from the currently active ANs only.

The minimum of those bounds prunes every branch that cannot beat the
incumbent.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from ..sinr import Association, _gain_array, baseline_association, evaluate


@dataclass
class SearchResult:
    theta_star: float
    association: Association
    nodes: int
    wall_time: float
    optimal: bool = True


def local_search(serving, P: np.ndarray, L: int, max_rounds: int = 50):
    """Best-improvement single-UE moves from ``serving``; returns (serving, value)."""
    K, M = P.shape
    serving = np.array(serving, dtype=int)
    g_dummy = P  # evaluate with p = 1 on P

    def value(s):
        r = evaluate(Association(tuple(s), M), g_dummy, L, 1.0)
        return r.min_sinr

    best = value(serving)
    for _ in range(max_rounds):
        improved = False
        cand_best, cand_val = None, best
        for k in range(K):
            for m in range(M):
                if m == serving[k]:
                    continue
                trial = serving.copy()
                trial[k] = m
                v = value(trial)
                if v > cand_val * (1 + 1e-12):
                    cand_best, cand_val = trial, v
        if cand_best is not None:
            serving, best = cand_best, cand_val
            improved = True
        if not improved:
            break
    return serving, best


def exact_search(gains, L: int, p: float, node_limit: int | None = None, time_limit: float | None = None) -> SearchResult:
    g = _gain_array(gains)
    K, M = g.shape
    P = p * g
    t0 = time.perf_counter()
    gain_tab = np.array([math.inf] + [(L - s + 1) / s for s in range(1, K + 2)])

    base = np.asarray(baseline_association(g).serving_an)
    inc_serv, inc_val = local_search(base, P, L)
    inc_serv = inc_serv.copy()

    # weakest UEs first: they decide the guaranteed level
    order = np.argsort(P.max(axis=1), kind="stable")
    loads = np.zeros(M, dtype=int)
    active = np.zeros(M, dtype=bool)
    tot = np.zeros(K)  # received power from active ANs, per UE
    serv = np.full(K, -1)
    nodes = 0
    stopped = False

    def bound_free(free_idx):
        if len(free_idx) == 0:
            return math.inf
        f = gain_tab[loads + 1]
        interf = tot[free_idx, None] - P[free_idx] * active
        return float(np.min(np.max(f * P[free_idx] / (1.0 + interf), axis=1)))

    def assigned_min(assigned_idx):
        if len(assigned_idx) == 0:
            return math.inf
        m = serv[assigned_idx]
        rx = P[assigned_idx, m]
        return float(np.min(gain_tab[loads[m]] * rx / (1.0 + tot[assigned_idx] - rx)))

    def dfs(depth):
        nonlocal inc_val, inc_serv, nodes, stopped
        if stopped:
            return
        nodes += 1
        if (node_limit is not None and nodes > node_limit) or (
            time_limit is not None and nodes % 256 == 0 and time.perf_counter() - t0 > time_limit
        ):
            stopped = True
            return
        if depth == K:
            val = assigned_min(order)
            if val > inc_val * (1 + 1e-12) or (inc_val <= 0 and val > inc_val):
                inc_val = val
                inc_serv = serv.copy()
            return
        k = order[depth]
        free_rest = order[depth + 1:]
        children = []
        for m in range(M):
            if loads[m] + 1 > L + 1:
                continue
            newly = not active[m]
            loads[m] += 1
            serv[k] = m
            if newly:
                active[m] = True
                tot[:] = P[:, active].sum(axis=1)
            ub = min(assigned_min(order[: depth + 1]), bound_free(free_rest))
            if newly:
                active[m] = False
                tot[:] = P[:, active].sum(axis=1)
            loads[m] -= 1
            serv[k] = -1
            if ub > inc_val * (1 + 1e-12) or (inc_val <= 0 and ub > inc_val):
                children.append((-ub, m))
        children.sort()
        for neg_ub, m in children:
            if -neg_ub <= inc_val * (1 + 1e-12):
                continue
            newly = not active[m]
            loads[m] += 1
            serv[k] = m
            if newly:
                active[m] = True
                tot[:] = P[:, active].sum(axis=1)
            dfs(depth + 1)
            if newly:
                active[m] = False
                tot[:] = P[:, active].sum(axis=1)
            loads[m] -= 1
            serv[k] = -1

    dfs(0)
    assoc = Association(tuple(int(m) for m in inc_serv), M)
    return SearchResult(evaluate(assoc, g, L, p).min_sinr, assoc, nodes, time.perf_counter() - t0, not stopped)
