"""Shared fixtures: hand-sized grids with known optima and the IEEE cases."""

from pathlib import Path

import numpy as np
import pytest

from opfkit.matpower import make_basic, read_case
from opfkit.network import Network

DATA = Path(__file__).parent / "data"


def make_two_bus(*, smax=2.0, b_series=-10.0, cost=(5.0,), gen_buses=(0,),
                 pgmax=2.0, pd=1.0, qd=0.0, vm_lo=0.9, vm_hi=1.1,
                 dva=np.pi / 3, qg_range=(-2.0, 2.0), pgmax_list=None):
    """Two buses joined by one lossless branch; loads at bus 2."""
    ng = len(gen_buses)
    ne = 1
    b = b_series
    pgmax_arr = np.asarray(pgmax_list if pgmax_list is not None
                           else [pgmax] * ng, dtype=float)
    return Network(
        name="twobus", base_mva=100.0, ref_bus=0,
        gs=np.zeros(2), bs=np.zeros(2),
        vmin=np.full(2, vm_lo), vmax=np.full(2, vm_hi),
        vnom=np.full(2, 135.0),
        gen_bus=np.asarray(gen_buses, dtype=np.int64),
        pgmin=np.zeros(ng), pgmax=pgmax_arr,
        qgmin=np.full(ng, qg_range[0]), qgmax=np.full(ng, qg_range[1]),
        cost=np.asarray(cost, dtype=float),
        load_bus=np.array([1], dtype=np.int64),
        pd_ref=np.array([pd]), qd_ref=np.array([qd]),
        branch_from=np.array([0], dtype=np.int64),
        branch_to=np.array([1], dtype=np.int64),
        g=np.zeros(ne), b=np.full(ne, b),
        gff=np.zeros(ne), bff=np.full(ne, b),
        gft=np.zeros(ne), bft=np.full(ne, -b),
        gtf=np.zeros(ne), btf=np.full(ne, -b),
        gtt=np.zeros(ne), btt=np.full(ne, b),
        smax=np.full(ne, smax),
        dva_min=np.full(ne, -dva), dva_max=np.full(ne, dva))


def make_graph_net(bfrom, bto, n_bus, *, n_gen=1, loads=None):
    """Arbitrary topology with uniform electrical data, for graph tests."""
    ne = len(bfrom)
    loads = loads if loads is not None else [(n_bus - 1, 1.0, 0.2)]
    return Network(
        name="graph", base_mva=100.0, ref_bus=0,
        gs=np.zeros(n_bus), bs=np.zeros(n_bus),
        vmin=np.full(n_bus, 0.9), vmax=np.full(n_bus, 1.1),
        vnom=np.full(n_bus, 135.0),
        gen_bus=np.zeros(n_gen, dtype=np.int64),
        pgmin=np.zeros(n_gen), pgmax=np.full(n_gen, 10.0),
        qgmin=np.full(n_gen, -10.0), qgmax=np.full(n_gen, 10.0),
        cost=np.full(n_gen, 5.0),
        load_bus=np.array([b for b, _, _ in loads], dtype=np.int64),
        pd_ref=np.array([p for _, p, _ in loads]),
        qd_ref=np.array([q for _, _, q in loads]),
        branch_from=np.asarray(bfrom, dtype=np.int64),
        branch_to=np.asarray(bto, dtype=np.int64),
        g=np.zeros(ne), b=np.full(ne, -10.0),
        gff=np.zeros(ne), bff=np.full(ne, -10.0),
        gft=np.zeros(ne), bft=np.full(ne, 10.0),
        gtf=np.zeros(ne), btf=np.full(ne, 10.0),
        gtt=np.zeros(ne), btt=np.full(ne, -10.0),
        smax=np.full(ne, 2.0),
        dva_min=np.full(ne, -1.0), dva_max=np.full(ne, 1.0))


@pytest.fixture
def dc_toy():
    """min 5 pg; pd=1 at bus 2; x=0.1 => b=-10; optimum pg=1, theta2=-0.1."""
    return make_two_bus()


@pytest.fixture
def dc_toy_congested():
    """Line capped at 0.5 with a second 10-unit generator at bus 2."""
    return make_two_bus(smax=0.5, cost=(5.0, 10.0), gen_buses=(0, 1))


@pytest.fixture
def ac_toy():
    """Lossless x=1 branch, vm pinned to 1, pd=0.5: pg=0.5, delta=pi/6.

    Bus 2 carries a zero-capacity generator so reactive charging has a sink.
    """
    return make_two_bus(b_series=-1.0, cost=(1.0, 0.0), gen_buses=(0, 1),
                        pgmax_list=[2.0, 0.0], pd=0.5, vm_lo=1.0, vm_hi=1.0,
                        qg_range=(-1.0, 1.0))


def load_ieee(name: str) -> Network:
    return make_basic(read_case(DATA / f"{name}.m"), linearize_costs=True)


@pytest.fixture(scope="session")
def net14():
    return load_ieee("case14_ieee")


@pytest.fixture(scope="session")
def net57():
    return load_ieee("case57_ieee")


@pytest.fixture(scope="session")
def net118():
    return load_ieee("case118_ieee")
