"""OPF formulations: problem builders, solution extraction, residuals."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from ..solvers import SolverOptions, solve_conic, solve_lp, solve_nlp
from . import ac, dc, soc
from .ac import AcopfNlp, build_acopf
from .common import ActiveSet, FormulationError, reference_instance
from .dc import build_dcopf
from .residuals import (AC_POINT_KEYS, DC_POINT_KEYS, SOC_POINT_KEYS,
                        ResidualReport, evaluate_residuals)
from .soc import build_socopf, derive_w_bounds


@dataclass(frozen=True)
class Formulation:
    """One formulation's builders, solver entry, and table layout."""

    name: str            # dataset directory name
    kind: str            # residual/duality kind tag
    build: Callable
    solve: Callable
    extract_primal: Callable
    extract_dual: Callable
    default_options: SolverOptions
    primal_keys: tuple[str, ...]
    dual_keys: tuple[str, ...]


_BOUND = lambda *names: tuple(f"{n}_{side}" for n in names for side in ("lb", "ub"))  # noqa: E731

FORMULATIONS: dict[str, Formulation] = {
    "DCOPF": Formulation(
        name="DCOPF", kind="dc",
        build=build_dcopf, solve=solve_lp,
        extract_primal=dc.extract_primal, extract_dual=dc.extract_dual,
        default_options=SolverOptions(tol=1e-8, max_iter=200),
        primal_keys=("pg", "va", "pf"),
        dual_keys=("slack_bus", "kcl", "ohm", "va_diff")
        + _BOUND("pg", "pf"),
    ),
    "SOCOPF": Formulation(
        name="SOCOPF", kind="soc",
        build=build_socopf, solve=solve_conic,
        extract_primal=soc.extract_primal, extract_dual=soc.extract_dual,
        default_options=SolverOptions(tol=1e-7, max_iter=200),
        primal_keys=("pg", "qg", "w", "wr", "wi", "pf", "pt", "qf", "qt"),
        dual_keys=("kcl_p", "kcl_q", "ohm_pf", "ohm_qf", "ohm_pt", "ohm_qt",
                   "sm_fr", "sm_to", "jabr", "va_diff_lb", "va_diff_ub")
        + _BOUND("w", "wr", "wi", "pg", "qg", "pf", "qf", "pt", "qt"),
    ),
    "ACOPF": Formulation(
        name="ACOPF", kind="ac",
        build=build_acopf, solve=solve_nlp,
        extract_primal=ac.extract_primal, extract_dual=ac.extract_dual,
        default_options=SolverOptions(tol=1e-6, max_iter=300),
        primal_keys=("pg", "qg", "vm", "va", "pf", "qf", "pt", "qt"),
        dual_keys=("slack_bus", "kcl_p", "kcl_q", "ohm_pf", "ohm_qf",
                   "ohm_pt", "ohm_qt", "sm_fr", "sm_to", "va_diff")
        + _BOUND("pg", "qg", "vm", "pf", "qf", "pt", "qt"),
    ),
}

__all__ = [
    "ActiveSet", "AcopfNlp", "FORMULATIONS", "Formulation",
    "FormulationError", "ResidualReport",
    "AC_POINT_KEYS", "DC_POINT_KEYS", "SOC_POINT_KEYS",
    "build_acopf", "build_dcopf", "build_socopf",
    "derive_w_bounds", "evaluate_residuals", "reference_instance",
]
