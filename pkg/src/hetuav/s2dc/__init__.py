"""Secrecy precoding: lifted variables, d.c. surrogate, barrier IPM, driver."""

from hetuav.s2dc.ipm import InfeasibleStart, IPMResult, NumericalFailure, solve_subproblem
from hetuav.s2dc.lifted import (LiftedVars, extract_rank_one, f_tilde_terms, lift, linearized_lambda,
                                phi_terms, principal_eig, rank_one_gap)
from hetuav.s2dc.solver import DcIterate, S2DCOptions, S2DCResult, feasible_start, s2dc_solve
from hetuav.s2dc.surrogate import Compiled, ConvexSubproblem, compile_problem

__all__ = [
    "Compiled", "ConvexSubproblem", "DcIterate", "IPMResult", "InfeasibleStart", "LiftedVars", "NumericalFailure",
    "S2DCOptions", "S2DCResult", "compile_problem", "extract_rank_one", "f_tilde_terms",
    "feasible_start", "lift", "linearized_lambda", "phi_terms", "principal_eig", "rank_one_gap",
    "s2dc_solve", "solve_subproblem",
]
