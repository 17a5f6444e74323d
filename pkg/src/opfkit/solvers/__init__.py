"""Embedded optimization kernels: LP/conic interior point and barrier NLP."""

from .result import SolveResult, SolverOptions, Status
from .conic import solve_conic, solve_lp
from .nlp import solve_nlp

__all__ = ["SolveResult", "SolverOptions", "Status",
           "solve_conic", "solve_lp", "solve_nlp"]
