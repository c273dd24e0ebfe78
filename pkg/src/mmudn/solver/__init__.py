from .bnb import BnBConfig, SolveResult, SolverError, solve_milp
from .lp import LpProblem, LpSolution, solve_lp, solve_lp_highs
from .oracle import EquivalenceReport, TooLargeError, brute_force_maxmin, verify_equivalence
from .search import SearchResult, exact_search, local_search

__all__ = [
    "BnBConfig", "SolveResult", "SolverError", "solve_milp",
    "LpProblem", "LpSolution", "solve_lp", "solve_lp_highs",
    "EquivalenceReport", "TooLargeError", "brute_force_maxmin", "verify_equivalence",
    "SearchResult", "exact_search", "local_search",
]
