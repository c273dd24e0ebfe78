"""Effective SINR of Massive-MIMO access nodes under a given user association.

The effective SINR of UE ``k`` served by AN ``m`` with ``S`` co-served UEs is

    (L - S + 1) / S * p g[k, m] / (1 + sum_{j active, j != m} p g[k, j])

Only large-scale gains enter, and only ANs serving at least one UE radiate
interference; idle ANs are switched off.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np


def _gain_array(gains) -> np.ndarray:
    g = np.asarray(getattr(gains, "gains", gains), dtype=float)
    if g.ndim != 2:
        raise ValueError("gains must be a K x M matrix")
    return g


@dataclass(frozen=True)
class Association:
    """Serving AN per UE, ``serving_an[k] = m``."""

    serving_an: tuple[int, ...]
    num_ans: int

    def __post_init__(self):
        serving = tuple(int(m) for m in self.serving_an)
        if self.num_ans < 1:
            raise ValueError("num_ans must be >= 1")
        if any(m < 0 or m >= self.num_ans for m in serving):
            raise ValueError(f"serving AN index out of range 0..{self.num_ans - 1}")
        object.__setattr__(self, "serving_an", serving)

    @property
    def num_ues(self) -> int:
        return len(self.serving_an)

    @property
    def loads(self) -> np.ndarray:
        return np.bincount(np.asarray(self.serving_an, dtype=int), minlength=self.num_ans)

    @property
    def active(self) -> np.ndarray:
        """Boolean AN activity, ``rho[m] = loads[m] >= 1``."""
        return self.loads >= 1

    @property
    def active_set(self) -> frozenset[int]:
        return frozenset(self.serving_an)

    def indicator(self) -> np.ndarray:
        """K x M one-hot association matrix."""
        a = np.zeros((self.num_ues, self.num_ans))
        a[np.arange(self.num_ues), self.serving_an] = 1.0
        return a

    def feasible(self, antennas: int) -> bool:
        return bool(np.all(self.loads <= antennas + 1))


def massive_mimo_gain(L: int, S: int) -> float:
    """Array gain factor ``(L - S + 1) / S``; non-positive once ``S > L``."""
    if S < 1:
        raise ValueError("load S must be >= 1")
    return (L - S + 1) / S


def _sinr_vector(serving: np.ndarray, loads: np.ndarray, g: np.ndarray, L: int, p: float) -> np.ndarray:
    K = len(serving)
    rx = p * g
    active = loads >= 1
    interference = rx[:, active].sum(axis=1) - rx[np.arange(K), serving]
    s = loads[serving]
    return (L - s + 1) / s * rx[np.arange(K), serving] / (1.0 + interference)


def effective_sinr(ue: int, association: Association, gains, L: int, p: float) -> float:
    g = _gain_array(gains)
    m = association.serving_an[ue]
    loads = association.loads
    rx = p * g[ue]
    interference = sum(rx[j] for j in range(len(loads)) if j != m and loads[j] >= 1)
    return massive_mimo_gain(L, int(loads[m])) * rx[m] / (1.0 + interference)


def sinr_vector(association: Association, gains, L: int, p: float) -> np.ndarray:
    g = _gain_array(gains)
    if g.shape != (association.num_ues, association.num_ans):
        raise ValueError(f"gain shape {g.shape} does not match association")
    return _sinr_vector(np.asarray(association.serving_an), association.loads, g, L, p)


def baseline_association(gains) -> Association:
    """Max received power: each UE picks its strongest AN, lowest index on ties."""
    g = _gain_array(gains)
    return Association(tuple(np.argmax(g, axis=1)), g.shape[1])


@dataclass(frozen=True)
class RateReport:
    sinr: np.ndarray
    rates: np.ndarray
    min_rate: float
    min_sinr: float
    active_an_count: int
    feasible: bool = True

    @property
    def min_sinr_db(self) -> float:
        return 10 * math.log10(self.min_sinr) if self.min_sinr > 0 else -math.inf


def evaluate(association: Association, gains, L: int, p: float) -> RateReport:
    """Per-UE effective SINR and rate ``log2(1 + sinr)``.

    Associations loading any AN past ``L + 1`` (negative array gain) are
    flagged infeasible and get ``min_sinr = min_rate = -inf``. A load of
    exactly ``L + 1`` is feasible with zero SINR.
    """
    sinr = sinr_vector(association, gains, L, p)
    active = int(association.active.sum())
    if np.any(association.loads > L + 1):
        return RateReport(sinr, np.full_like(sinr, -np.inf), -math.inf, -math.inf, active, False)
    rates = np.log2(1.0 + sinr)
    return RateReport(sinr, rates, float(rates.min()), float(sinr.min()), active)


def min_sinr(association: Association, gains, L: int, p: float) -> float:
    return evaluate(association, gains, L, p).min_sinr


def write_association_csv(association: Association, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ue_index", "an_index"])
        w.writerows(enumerate(association.serving_an))


def read_association_csv(path, num_ans: int) -> Association:
    with open(path, newline="") as fh:
        rows = sorted((int(r["ue_index"]), int(r["an_index"])) for r in csv.DictReader(fh))
    return Association(tuple(m for _, m in rows), num_ans)


def report_row(report: RateReport) -> list[str]:
    """CSV row: min_rate, min_sinr_db, active_ans, per-UE rates."""
    return [f"{report.min_rate:.6g}", f"{report.min_sinr_db:.6g}", str(report.active_an_count)] + [
        f"{r:.6g}" for r in report.rates
    ]


def report_header(num_ues: int) -> list[str]:
    return ["min_rate", "min_sinr_db", "active_ans"] + [f"rate_{k}" for k in range(num_ues)]
