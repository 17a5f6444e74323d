"""Solver status, options, and result containers."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Status(enum.Enum):
    OPTIMAL = "optimal"
    LOCALLY_OPTIMAL = "locally-optimal"
    INFEASIBLE_OR_UNBOUNDED = "infeasible-or-unbounded"
    ITERATION_LIMIT = "iteration-limit"
    NUMERICAL_FAILURE = "numerical-failure"

    @property
    def is_solved(self) -> bool:
        return self in (Status.OPTIMAL, Status.LOCALLY_OPTIMAL)


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 200
    time_limit: float | None = None

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass
class SolveResult:
    """Primal/dual output of one solve.

    Conic/LP solves populate ``y`` (one dual per constraint row, in the dual
    cone, sign convention: equality duals free, lower-bound rows >= 0; stored
    upper-bound duals are derived as negatives by the extractors).  NLP solves
    populate ``lam_eq``/``lam_ineq`` (multipliers of h(x)=0 and g(x)>=0) and
    the bound duals ``z_lb``/``z_ub`` (both nonnegative internally).
    """

    status: Status
    primal_objective: float = np.nan
    dual_objective: float = np.nan
    iterations: int = 0
    solve_time: float = 0.0
    message: str = ""

    x: np.ndarray | None = None
    # conic
    y: np.ndarray | None = None
    s: np.ndarray | None = None
    # nlp
    lam_eq: np.ndarray | None = None
    lam_ineq: np.ndarray | None = None
    z_lb: np.ndarray | None = None
    z_ub: np.ndarray | None = None
