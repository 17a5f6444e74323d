"""Shared indexing for formulations built on a sampled instance.

Disabled equipment is dropped from the optimization entirely; extraction
re-expands solution arrays to full network size with zeros in the disabled
slots, matching the on-disk layout.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..network import Network, connected
from ..sampling import InstanceInput


class FormulationError(ValueError):
    pass


@dataclass(frozen=True)
class ActiveSet:
    """Index maps from the in-service subproblem back to the full network."""

    network: Network
    inp: InstanceInput

    def __post_init__(self):
        net, inp = self.network, self.inp
        if inp.pd.size != net.n_load or inp.qd.size != net.n_load:
            raise FormulationError("demand vector length != number of loads")
        if inp.branch_status.size != net.n_branch \
                or inp.gen_status.size != net.n_gen:
            raise FormulationError("status vector length mismatch")
        if not np.all(np.isfinite(inp.pd)) or not np.all(np.isfinite(inp.qd)):
            raise FormulationError("demands must be finite")
        if not connected(net.n_bus, net.branch_from, net.branch_to,
                         mask=inp.branch_status.astype(bool)):
            raise FormulationError("in-service branch graph is disconnected")

    @cached_property
    def gens(self) -> np.ndarray:
        return np.flatnonzero(self.inp.gen_status != 0)

    @cached_property
    def branches(self) -> np.ndarray:
        return np.flatnonzero(self.inp.branch_status != 0)

    @property
    def n_gen(self) -> int:
        return self.gens.size

    @property
    def n_branch(self) -> int:
        return self.branches.size

    @cached_property
    def gen_bus(self) -> np.ndarray:
        return np.asarray(self.network.gen_bus)[self.gens]

    @cached_property
    def branch_from(self) -> np.ndarray:
        return np.asarray(self.network.branch_from)[self.branches]

    @cached_property
    def branch_to(self) -> np.ndarray:
        return np.asarray(self.network.branch_to)[self.branches]

    @cached_property
    def bus_pd(self) -> np.ndarray:
        """Total sampled active demand per bus."""
        out = np.zeros(self.network.n_bus)
        np.add.at(out, np.asarray(self.network.load_bus), self.inp.pd)
        return out

    @cached_property
    def bus_qd(self) -> np.ndarray:
        out = np.zeros(self.network.n_bus)
        np.add.at(out, np.asarray(self.network.load_bus), self.inp.qd)
        return out

    def branch_param(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self.network, name))[self.branches]

    def gen_param(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self.network, name))[self.gens]

    def expand_gen(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros(self.network.n_gen)
        out[self.gens] = values
        return out

    def expand_branch(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros(self.network.n_branch)
        out[self.branches] = values
        return out


def reference_instance(network: Network) -> InstanceInput:
    """Instance at the snapshot's reference demand with everything in service."""
    return InstanceInput(
        pd=np.asarray(network.pd_ref).copy(),
        qd=np.asarray(network.qd_ref).copy(),
        branch_status=np.ones(network.n_branch, dtype=np.int8),
        gen_status=np.ones(network.n_gen, dtype=np.int8),
        seed=0)


class CooBuilder:
    """Accumulates COO triplets and named row groups for one problem."""

    def __init__(self, n_var: int):
        self.n_var = n_var
        self.rows: list[np.ndarray] = []
        self.cols: list[np.ndarray] = []
        self.vals: list[np.ndarray] = []
        self.b: list[np.ndarray] = []
        self.row_names: dict[str, slice] = {}
        self.m = 0

    def add_group(self, name: str, n_rows: int, entries, rhs):
        """entries: iterable of (local_row, col, value) arrays."""
        base = self.m
        for lr, cc, vv in entries:
            lr = np.asarray(lr, dtype=np.int64)
            self.rows.append(lr + base)
            self.cols.append(np.asarray(cc, dtype=np.int64))
            self.vals.append(np.asarray(vv, dtype=float))
        self.b.append(np.asarray(rhs, dtype=float))
        if name in self.row_names:
            raise ValueError(f"duplicate row group {name}")
        self.row_names[name] = slice(base, base + n_rows)
        self.m += n_rows

    def matrix(self):
        import scipy.sparse as sp

        rows = np.concatenate(self.rows) if self.rows else np.zeros(0, dtype=np.int64)
        cols = np.concatenate(self.cols) if self.cols else np.zeros(0, dtype=np.int64)
        vals = np.concatenate(self.vals) if self.vals else np.zeros(0)
        a = sp.csr_matrix((vals, (rows, cols)), shape=(self.m, self.n_var))
        b = np.concatenate(self.b) if self.b else np.zeros(0)
        return a, b
