"""Tiny LPs with optima worked out by hand (maximize c @ x)."""

import numpy as np

from mmudn.solver.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LpProblem

INF = np.inf


def _lp(c, A, senses, b, lb=None, ub=None):
    return LpProblem(np.array(c, float), np.array(A, float), senses, np.array(b, float),
                     None if lb is None else np.array(lb, float), None if ub is None else np.array(ub, float))


# name, problem, status, objective, optimal x (None when not unique or not applicable)
BATTERY = [
    ("single_upper_row", _lp([1], [[1]], ["<="], [3]), OPTIMAL, 3.0, [3.0]),
    ("infeasible_pair", _lp([1], [[1]], ["<="], [-1]), INFEASIBLE, None, None),
    ("unbounded_ray", _lp([1], [[-1]], ["<="], [1]), UNBOUNDED, None, None),
    # vertices of {x+y<=4, x+3y<=6, x<=3}: (3,1) gives 11
    ("two_rows_and_bound", _lp([3, 2], [[1, 1], [1, 3]], ["<=", "<="], [4, 6], ub=[3, INF]), OPTIMAL, 11.0, [3.0, 1.0]),
    # textbook product-mix LP, optimum (2, 6)
    ("product_mix", _lp([3, 5], [[1, 0], [0, 2], [3, 2]], ["<="] * 3, [4, 12, 18]), OPTIMAL, 36.0, [2.0, 6.0]),
    # x = 4 - 2y, objective 4 - y
    ("equality_row", _lp([1, 1], [[1, 2], [1, -1]], ["=", ">="], [4, -1]), OPTIMAL, 4.0, [4.0, 0.0]),
    # min x + y over x+2y>=4, 3x+y>=6: vertex (8/5, 6/5)
    ("covering_phase_one", _lp([-1, -1], [[1, 2], [3, 1]], [">=", ">="], [4, 6]), OPTIMAL, -2.8, [1.6, 1.2]),
    # free variables: x <= y and x <= 2 - y, best at (1, 1)
    ("free_variables", _lp([1, 0], [[1, 1], [1, -1]], ["<=", "<="], [2, 0], lb=[-INF, -INF], ub=[INF, INF]),
     OPTIMAL, 1.0, [1.0, 1.0]),
    ("boxed_variables", _lp([1, 1], [[1, 1]], ["<="], [10], ub=[1.5, 2.5]), OPTIMAL, 4.0, [1.5, 2.5]),
    ("negative_lower_bound", _lp([-1], [[1]], ["<="], [5], lb=[-3], ub=[5]), OPTIMAL, 3.0, [-3.0]),
    # Beale's cycling example; optimum 5/4 at x = (1, 0, 1, 0)
    ("beale_cycling", _lp([0.75, -20, 0.5, -6], [[0.25, -8, -1, 9], [0.5, -12, -0.5, 3], [0, 0, 1, 0]],
                          ["<="] * 3, [0, 0, 1]), OPTIMAL, 1.25, [1.0, 0.0, 1.0, 0.0]),
    ("redundant_equalities", _lp([1, 0], [[1, 1], [2, 2]], ["=", "="], [2, 4], lb=[0, 0.5]), OPTIMAL, 1.5, [1.5, 0.5]),
    ("inconsistent_equalities", _lp([1, 1], [[1, 1], [1, 1]], ["=", "="], [1, 2]), INFEASIBLE, None, None),
    # Klee-Minty cube in 3D, optimum at (0, 0, 125)
    ("klee_minty_3", _lp([4, 2, 1], [[1, 0, 0], [4, 1, 0], [8, 4, 1]], ["<="] * 3, [5, 25, 125]), OPTIMAL, 125.0,
     [0.0, 0.0, 125.0]),
    ("empty_box", _lp([1], [[1]], ["<="], [1], lb=[2], ub=[1]), INFEASIBLE, None, None),
]
