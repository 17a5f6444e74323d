"""Canonical in-memory grid model.

A :class:`Network` is the preprocessed, immutable snapshot every other module
works from: index sets (buses, loads, generators, branches), per-unit bounds,
linear costs, branch admittance blocks, and adjacency structure.  All indices
are 0-based in memory; 1-based indexing appears only in serialized artifacts.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, fields
from functools import cached_property

import numpy as np


class NetworkError(ValueError):
    """Raised when grid data violates a structural invariant."""


def branch_admittance(r, x, b_c, tap, shift):
    """Two-port admittance blocks of a branch with an ideal transformer.

    With series admittance ys = 1/(r + jx), ratio tau and phase shift theta:

        Yff = (ys + j*b_c/2) / tau**2
        Yft = -ys / (tau * exp(-j*theta))
        Ytf = -ys / (tau * exp(+j*theta))
        Ytt = ys + j*b_c/2

    Returns (gff, bff, gft, bft, gtf, btf, gtt, btt).
    """
    if r * r + x * x == 0.0:
        raise NetworkError("branch has zero impedance (r == x == 0)")
    if tap <= 0.0:
        raise NetworkError(f"tap ratio must be positive, got {tap}")
    ys = 1.0 / complex(r, x)
    ych = complex(0.0, b_c / 2.0)
    yff = (ys + ych) / tap**2
    yft = -ys / (tap * cmath.exp(complex(0.0, -shift)))
    ytf = -ys / (tap * cmath.exp(complex(0.0, shift)))
    ytt = ys + ych
    return (yff.real, yff.imag, yft.real, yft.imag,
            ytf.real, ytf.imag, ytt.real, ytt.imag)


@dataclass(frozen=True)
class Network:
    """Immutable preprocessed network, all quantities per-unit on ``base_mva``.

    Branch orientation: ``branch_from[e] -> branch_to[e]``.  Angle-difference
    windows satisfy ``dva_min <= 0 <= dva_max`` and ``|dva| < pi/2``.
    """

    name: str
    base_mva: float
    ref_bus: int

    # bus arrays, shape (n_bus,)
    gs: np.ndarray
    bs: np.ndarray
    vmin: np.ndarray
    vmax: np.ndarray
    vnom: np.ndarray  # nominal voltage [kV]; metadata only

    # generator arrays, shape (n_gen,)
    gen_bus: np.ndarray
    pgmin: np.ndarray
    pgmax: np.ndarray
    qgmin: np.ndarray
    qgmax: np.ndarray
    cost: np.ndarray  # linear cost per p.u. of active generation

    # load arrays, shape (n_load,)
    load_bus: np.ndarray
    pd_ref: np.ndarray
    qd_ref: np.ndarray

    # branch arrays, shape (n_branch,)
    branch_from: np.ndarray
    branch_to: np.ndarray
    g: np.ndarray  # series conductance
    b: np.ndarray  # series susceptance
    gff: np.ndarray
    bff: np.ndarray
    gft: np.ndarray
    bft: np.ndarray
    gtf: np.ndarray
    btf: np.ndarray
    gtt: np.ndarray
    btt: np.ndarray
    smax: np.ndarray
    dva_min: np.ndarray
    dva_max: np.ndarray

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, np.ndarray):
                v.setflags(write=False)
        self._validate()

    # -- sizes ------------------------------------------------------------

    @property
    def n_bus(self) -> int:
        return self.vmin.size

    @property
    def n_gen(self) -> int:
        return self.gen_bus.size

    @property
    def n_load(self) -> int:
        return self.load_bus.size

    @property
    def n_branch(self) -> int:
        return self.branch_from.size

    # -- adjacency ---------------------------------------------------------

    @cached_property
    def branches_from_bus(self) -> tuple[np.ndarray, ...]:
        """E_i: branch indices leaving bus i."""
        return _group_by_bus(self.branch_from, self.n_bus)

    @cached_property
    def branches_to_bus(self) -> tuple[np.ndarray, ...]:
        """E_i^R: branch indices entering bus i."""
        return _group_by_bus(self.branch_to, self.n_bus)

    @cached_property
    def gens_at_bus(self) -> tuple[np.ndarray, ...]:
        """G_i: generator indices attached to bus i."""
        return _group_by_bus(self.gen_bus, self.n_bus)

    @cached_property
    def loads_at_bus(self) -> tuple[np.ndarray, ...]:
        """L_i: load indices attached to bus i."""
        return _group_by_bus(self.load_bus, self.n_bus)

    # -- validation ---------------------------------------------------------

    def _validate(self):
        nb = self.n_bus
        if nb == 0:
            raise NetworkError("network has no buses")
        if not 0 <= self.ref_bus < nb:
            raise NetworkError(f"reference bus {self.ref_bus} out of range")
        if np.any(self.vmin > self.vmax):
            raise NetworkError("vmin > vmax on some bus")
        if np.any(self.pgmin > self.pgmax):
            raise NetworkError("pgmin > pgmax on some generator")
        if np.any(self.qgmin > self.qgmax):
            raise NetworkError("qgmin > qgmax on some generator")
        for arr, what in ((self.gen_bus, "generator"),
                          (self.load_bus, "load"),
                          (self.branch_from, "branch endpoint"),
                          (self.branch_to, "branch endpoint")):
            if arr.size and (arr.min() < 0 or arr.max() >= nb):
                raise NetworkError(f"{what} references bus outside 0..{nb - 1}")
        if np.any(self.branch_from == self.branch_to):
            raise NetworkError("branch with identical endpoints")
        if np.any(self.dva_min > 0.0) or np.any(self.dva_max < 0.0):
            raise NetworkError("angle window must contain 0 on every branch")
        if np.any(np.abs(self.dva_min) >= np.pi / 2) or np.any(self.dva_max >= np.pi / 2):
            raise NetworkError("angle window must be strictly inside +-pi/2")
        if np.any(self.smax <= 0.0):
            raise NetworkError("thermal limit smax must be positive")
        if self.n_branch and not connected(nb, self.branch_from, self.branch_to):
            comps = components(nb, self.branch_from, self.branch_to)
            raise NetworkError(f"network graph is disconnected: components {comps}")
        if self.n_branch == 0 and nb > 1:
            raise NetworkError("network graph is disconnected: no branches")

    def total_pd(self) -> float:
        return float(self.pd_ref.sum())

    def total_qd(self) -> float:
        return float(self.qd_ref.sum())


def _group_by_bus(bus_of: np.ndarray, n_bus: int) -> tuple[np.ndarray, ...]:
    groups: list[list[int]] = [[] for _ in range(n_bus)]
    for k, i in enumerate(bus_of):
        groups[int(i)].append(k)
    return tuple(np.asarray(g, dtype=np.int64) for g in groups)


def components(n_bus: int, bfrom: np.ndarray, bto: np.ndarray,
               mask: np.ndarray | None = None) -> list[list[int]]:
    """Connected components of the bus graph over the in-service branches."""
    adj: list[list[int]] = [[] for _ in range(n_bus)]
    for e in range(len(bfrom)):
        if mask is not None and not mask[e]:
            continue
        i, j = int(bfrom[e]), int(bto[e])
        adj[i].append(j)
        adj[j].append(i)
    seen = np.zeros(n_bus, dtype=bool)
    comps = []
    for start in range(n_bus):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        comp = []
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        comps.append(comp)
    return comps


def connected(n_bus: int, bfrom: np.ndarray, bto: np.ndarray,
              mask: np.ndarray | None = None) -> bool:
    """BFS connectivity over in-service branches (``mask`` selects them)."""
    return len(components(n_bus, bfrom, bto, mask)) == 1


@dataclass(frozen=True)
class IncidenceCOO:
    """Sparse incidence matrix in COO triplets with 1-based indices."""

    shape: tuple[int, int]
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def entries(self) -> set[tuple[int, int, float]]:
        return {(int(r), int(c), float(v))
                for r, c, v in zip(self.rows, self.cols, self.values)}


def build_incidence(network: Network) -> tuple[IncidenceCOO, IncidenceCOO]:
    """Branch incidence A (E x N, +1 at from-bus, -1 at to-bus) and
    generator incidence Ag (N x G, 1 at the generator's bus)."""
    ne, nb, ng = network.n_branch, network.n_bus, network.n_gen
    rows = np.repeat(np.arange(1, ne + 1), 2)
    cols = np.empty(2 * ne, dtype=np.int64)
    cols[0::2] = network.branch_from + 1
    cols[1::2] = network.branch_to + 1
    vals = np.tile(np.array([1.0, -1.0]), ne)
    a = IncidenceCOO((ne, nb), rows, cols, vals)
    ag = IncidenceCOO((nb, ng), network.gen_bus + 1,
                      np.arange(1, ng + 1), np.ones(ng))
    return a, ag
