"""Solver-facing problem containers shared by formulations and kernels.

A :class:`ConicProblem` is ``min c'x  s.t.  A x - b in K`` where K is a
product of row blocks: zero cones (equalities, free duals), nonnegative rays,
second-order cones and rotated second-order cones.  The matching dual is
``max b'y  s.t.  A'y = c,  y in K*``.

An NLP is any object implementing the :class:`NlpProblem` protocol:
``min f(x)  s.t.  h(x) = 0,  g(x) >= 0,  lb <= x <= ub``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np
import scipy.sparse as sp

ZERO = "zero"
NONNEG = "nonneg"
SOC = "soc"
RSOC = "rsoc"


@dataclass(frozen=True)
class Cone:
    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in (ZERO, NONNEG, SOC, RSOC):
            raise ValueError(f"unknown cone kind {self.kind!r}")
        if self.kind == SOC and self.dim < 2:
            raise ValueError("second-order cone needs dimension >= 2")
        if self.kind == RSOC and self.dim < 3:
            raise ValueError("rotated cone needs dimension >= 3")


@dataclass
class ConicProblem:
    """Conic program with name maps back to the grid quantities.

    ``var_names``/``row_names`` map group names (``pg``, ``kcl``, ...) to row
    or column slices; ``meta`` carries formulation-specific extras such as
    active-element index maps.  ``var_lb``/``var_ub`` record the finite bounds
    every variable carries (the corresponding rows are part of ``a``/``b``
    whenever the model imposes them).
    """

    c: np.ndarray
    a: sp.csr_matrix
    b: np.ndarray
    cones: list[Cone]
    var_names: dict[str, slice] = field(default_factory=dict)
    row_names: dict[str, slice] = field(default_factory=dict)
    var_lb: np.ndarray | None = None
    var_ub: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_var(self) -> int:
        return self.c.size

    @property
    def n_row(self) -> int:
        return self.b.size

    def validate(self):
        m, n = self.a.shape
        if self.c.size != n or self.b.size != m:
            raise ValueError("inconsistent problem dimensions")
        if sum(k.dim for k in self.cones) != m:
            raise ValueError("cone dimensions do not sum to the row count")
        if self.var_lb is not None and not np.all(np.isfinite(self.var_lb)):
            raise ValueError("variable lower bounds must be finite")
        if self.var_ub is not None and not np.all(np.isfinite(self.var_ub)):
            raise ValueError("variable upper bounds must be finite")

    def rows(self, name: str) -> slice:
        return self.row_names[name]

    def cols(self, name: str) -> slice:
        return self.var_names[name]


@runtime_checkable
class NlpProblem(Protocol):
    """Smooth NLP interface consumed by the barrier kernel.

    ``var_lb``/``var_ub`` may hold +-inf for free coordinates.  ``lag_hess``
    returns the Hessian of ``f - lam_eq'h - lam_ineq'g``.
    """

    n: int
    var_lb: np.ndarray
    var_ub: np.ndarray

    def initial_point(self) -> np.ndarray: ...

    def objective(self, x: np.ndarray) -> float: ...

    def grad(self, x: np.ndarray) -> np.ndarray: ...

    def eq(self, x: np.ndarray) -> np.ndarray: ...

    def jac_eq(self, x: np.ndarray) -> sp.spmatrix: ...

    def ineq(self, x: np.ndarray) -> np.ndarray: ...

    def jac_ineq(self, x: np.ndarray) -> sp.spmatrix: ...

    def lag_hess(self, x: np.ndarray, lam_eq: np.ndarray,
                 lam_ineq: np.ndarray) -> sp.spmatrix: ...
