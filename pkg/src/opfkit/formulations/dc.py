"""DC optimal power flow as a linear conic problem.

Variables: pg (dispatch), pf (branch active flow), va (bus angle).  Power
balance keeps the shunt conductance as a constant demand term; branch flow
is ``pf = -b (va_i - va_j)`` with ``b`` the series susceptance.
"""

from __future__ import annotations

import numpy as np

from ..network import Network
from ..problems import NONNEG, ZERO, Cone, ConicProblem
from ..sampling import InstanceInput
from ..solvers.result import SolveResult
from .common import ActiveSet, CooBuilder


def build_dcopf(network: Network, inp: InstanceInput) -> ConicProblem:
    act = ActiveSet(network, inp)
    ng, ne, nb = act.n_gen, act.n_branch, network.n_bus

    pg = slice(0, ng)
    pf = slice(ng, ng + ne)
    va = slice(ng + ne, ng + ne + nb)
    n = ng + ne + nb

    c = np.zeros(n)
    c[pg] = act.gen_param("cost")

    bfrom, bto = act.branch_from, act.branch_to
    b_ser = act.branch_param("b")
    smax = act.branch_param("smax")
    pgmin, pgmax = act.gen_param("pgmin"), act.gen_param("pgmax")
    dva_min = act.branch_param("dva_min")
    dva_max = act.branch_param("dva_max")

    bld = CooBuilder(n)
    arange_e = np.arange(ne)
    arange_g = np.arange(ng)

    # nodal balance: sum(pg) - sum(pf out) + sum(pf in) = pd + gs
    bld.add_group("kcl", nb, [
        (act.gen_bus, pg.start + arange_g, np.ones(ng)),
        (bfrom, pf.start + arange_e, -np.ones(ne)),
        (bto, pf.start + arange_e, np.ones(ne)),
    ], act.bus_pd + np.asarray(network.gs))

    # flow definition: -b (va_i - va_j) - pf = 0
    bld.add_group("ohm", ne, [
        (arange_e, va.start + bfrom, -b_ser),
        (arange_e, va.start + bto, b_ser),
        (arange_e, pf.start + arange_e, -np.ones(ne)),
    ], np.zeros(ne))

    bld.add_group("slack_bus", 1, [
        (np.zeros(1, dtype=int), np.array([va.start + network.ref_bus]), np.ones(1)),
    ], np.zeros(1))
    n_zero = bld.m

    # angle window on each branch
    bld.add_group("va_diff_lb", ne, [
        (arange_e, va.start + bfrom, np.ones(ne)),
        (arange_e, va.start + bto, -np.ones(ne)),
    ], dva_min)
    bld.add_group("va_diff_ub", ne, [
        (arange_e, va.start + bfrom, -np.ones(ne)),
        (arange_e, va.start + bto, np.ones(ne)),
    ], -dva_max)

    bld.add_group("pg_lb", ng, [(arange_g, pg.start + arange_g, np.ones(ng))], pgmin)
    bld.add_group("pg_ub", ng, [(arange_g, pg.start + arange_g, -np.ones(ng))], -pgmax)
    bld.add_group("pf_lb", ne, [(arange_e, pf.start + arange_e, np.ones(ne))], -smax)
    bld.add_group("pf_ub", ne, [(arange_e, pf.start + arange_e, -np.ones(ne))], -smax)

    a, b = bld.matrix()
    # implied angle box: |va| bounded through the angle windows and the slack
    va_cap = nb * float(np.max(dva_max, initial=0.0) + 0.1)
    var_lb = np.concatenate([pgmin, -smax, np.full(nb, -va_cap)])
    var_ub = np.concatenate([pgmax, smax, np.full(nb, va_cap)])

    return ConicProblem(
        c=c, a=a, b=b,
        cones=[Cone(ZERO, n_zero), Cone(NONNEG, bld.m - n_zero)],
        var_names={"pg": pg, "pf": pf, "va": va},
        row_names=bld.row_names,
        var_lb=var_lb, var_ub=var_ub,
        meta={"kind": "dc", "active": act})


def extract_primal(problem: ConicProblem, result: SolveResult) -> dict[str, np.ndarray]:
    act: ActiveSet = problem.meta["active"]
    x = result.x
    return {
        "pg": act.expand_gen(x[problem.cols("pg")]),
        "va": x[problem.cols("va")].copy(),
        "pf": act.expand_branch(x[problem.cols("pf")]),
    }


def extract_dual(problem: ConicProblem, result: SolveResult) -> dict[str, np.ndarray]:
    """Table-style dual arrays; lower-bound duals >= 0, upper-bound <= 0.

    ``va_diff`` is the signed sum of the two one-sided angle duals; the
    separate ``va_diff_lb``/``va_diff_ub`` entries are kept for exact dual
    objective recomputation and are not part of the serialized layout.
    """
    act: ActiveSet = problem.meta["active"]
    y = result.y

    def rows(name):
        return y[problem.rows(name)]

    lb = rows("va_diff_lb")
    ub = -rows("va_diff_ub")
    return {
        "slack_bus": rows("slack_bus").copy(),
        "kcl": rows("kcl").copy(),
        "ohm": act.expand_branch(rows("ohm")),
        "va_diff": act.expand_branch(lb + ub),
        "va_diff_lb": act.expand_branch(lb),
        "va_diff_ub": act.expand_branch(ub),
        "pg_lb": act.expand_gen(rows("pg_lb")),
        "pg_ub": act.expand_gen(-rows("pg_ub")),
        "pf_lb": act.expand_branch(rows("pf_lb")),
        "pf_ub": act.expand_branch(-rows("pf_ub")),
    }
