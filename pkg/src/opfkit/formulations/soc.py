"""Second-order cone relaxation of AC optimal power flow.

Voltage products are lifted to (w, wr, wi); the product identity is relaxed
to the cone constraint ``wr^2 + wi^2 <= w_i w_j``, posed as a rotated cone
on ``(w_i/sqrt2, w_j/sqrt2, wr, wi)``.  Branch thermal limits are
second-order cones on ``(smax, pf, qf)`` and ``(smax, pt, qt)``.
"""

from __future__ import annotations

import numpy as np

from ..network import Network
from ..problems import NONNEG, RSOC, SOC, ZERO, Cone, ConicProblem
from ..sampling import InstanceInput
from ..solvers.result import SolveResult
from .common import ActiveSet, CooBuilder, FormulationError

SQRT2 = np.sqrt(2.0)


def derive_w_bounds(vmin_i, vmax_i, vmin_j, vmax_j, dva_min, dva_max):
    """Bounds on the lifted voltage products over box voltages and the
    angle-difference window.

    cos is smallest at the window edge farthest from zero; sin is monotone,
    so its extremes sit at the window edges with the largest magnitudes.
    Accepts scalars or aligned arrays.
    """
    dva_min = np.asarray(dva_min, dtype=float)
    dva_max = np.asarray(dva_max, dtype=float)
    if np.any(dva_min > 0.0) or np.any(dva_max < 0.0):
        raise FormulationError("angle window must contain zero")
    if np.any(np.abs(dva_min) >= np.pi / 2) or np.any(np.abs(dva_max) >= np.pi / 2):
        raise FormulationError("angle window must be strictly inside +-pi/2")
    worst = np.maximum(np.abs(dva_min), dva_max)
    wr_lb = vmin_i * vmin_j * np.cos(worst)
    wr_ub = vmax_i * vmax_j * np.ones_like(worst)
    wi_lb = vmax_i * vmax_j * np.sin(dva_min)
    wi_ub = vmax_i * vmax_j * np.sin(dva_max)
    return wr_lb, wr_ub, wi_lb, wi_ub


def build_socopf(network: Network, inp: InstanceInput) -> ConicProblem:
    act = ActiveSet(network, inp)
    ng, ne, nb = act.n_gen, act.n_branch, network.n_bus

    sizes = [("pg", ng), ("qg", ng), ("pf", ne), ("qf", ne), ("pt", ne),
             ("qt", ne), ("w", nb), ("wr", ne), ("wi", ne)]
    var_names: dict[str, slice] = {}
    pos = 0
    for name, size in sizes:
        var_names[name] = slice(pos, pos + size)
        pos += size
    n = pos

    def col(name, idx):
        return var_names[name].start + idx

    c = np.zeros(n)
    c[var_names["pg"]] = act.gen_param("cost")

    bfrom, bto = act.branch_from, act.branch_to
    gff, bff = act.branch_param("gff"), act.branch_param("bff")
    gft, bft = act.branch_param("gft"), act.branch_param("bft")
    gtf, btf = act.branch_param("gtf"), act.branch_param("btf")
    gtt, btt = act.branch_param("gtt"), act.branch_param("btt")
    smax = act.branch_param("smax")
    dva_min, dva_max = act.branch_param("dva_min"), act.branch_param("dva_max")
    gs, bs = np.asarray(network.gs), np.asarray(network.bs)
    vmin, vmax = np.asarray(network.vmin), np.asarray(network.vmax)
    wr_lb, wr_ub, wi_lb, wi_ub = derive_w_bounds(
        vmin[bfrom], vmax[bfrom], vmin[bto], vmax[bto], dva_min, dva_max)

    bld = CooBuilder(n)
    ae = np.arange(ne)
    ag = np.arange(ng)
    ones_e, ones_g = np.ones(ne), np.ones(ng)

    # Kirchhoff current law with shunts on the lifted square voltage
    bld.add_group("kcl_p", nb, [
        (act.gen_bus, col("pg", ag), ones_g),
        (np.arange(nb), col("w", np.arange(nb)), -gs),
        (bfrom, col("pf", ae), -ones_e),
        (bto, col("pt", ae), -ones_e),
    ], act.bus_pd)
    bld.add_group("kcl_q", nb, [
        (act.gen_bus, col("qg", ag), ones_g),
        (np.arange(nb), col("w", np.arange(nb)), bs),
        (bfrom, col("qf", ae), -ones_e),
        (bto, col("qt", ae), -ones_e),
    ], act.bus_qd)

    # linear Ohm's law in the lifted variables
    bld.add_group("ohm_pf", ne, [
        (ae, col("w", bfrom), gff), (ae, col("wr", ae), gft),
        (ae, col("wi", ae), bft), (ae, col("pf", ae), -ones_e),
    ], np.zeros(ne))
    bld.add_group("ohm_qf", ne, [
        (ae, col("w", bfrom), -bff), (ae, col("wr", ae), -bft),
        (ae, col("wi", ae), gft), (ae, col("qf", ae), -ones_e),
    ], np.zeros(ne))
    bld.add_group("ohm_pt", ne, [
        (ae, col("w", bto), gtt), (ae, col("wr", ae), gtf),
        (ae, col("wi", ae), -btf), (ae, col("pt", ae), -ones_e),
    ], np.zeros(ne))
    bld.add_group("ohm_qt", ne, [
        (ae, col("w", bto), -btt), (ae, col("wr", ae), -btf),
        (ae, col("wi", ae), -gtf), (ae, col("qt", ae), -ones_e),
    ], np.zeros(ne))
    n_zero = bld.m

    # angle-difference linearization: tan(lo) wr <= wi <= tan(hi) wr
    bld.add_group("va_diff_lb", ne, [
        (ae, col("wi", ae), ones_e),
        (ae, col("wr", ae), -np.tan(dva_min)),
    ], np.zeros(ne))
    bld.add_group("va_diff_ub", ne, [
        (ae, col("wr", ae), np.tan(dva_max)),
        (ae, col("wi", ae), -ones_e),
    ], np.zeros(ne))

    def box(name, idx_cols, lo, hi, count):
        ar = np.arange(count)
        bld.add_group(f"{name}_lb", count,
                      [(ar, idx_cols, np.ones(count))], lo)
        bld.add_group(f"{name}_ub", count,
                      [(ar, idx_cols, -np.ones(count))], -hi)

    box("w", col("w", np.arange(nb)), vmin**2, vmax**2, nb)
    box("pg", col("pg", ag), act.gen_param("pgmin"), act.gen_param("pgmax"), ng)
    box("qg", col("qg", ag), act.gen_param("qgmin"), act.gen_param("qgmax"), ng)
    for f in ("pf", "qf", "pt", "qt"):
        box(f, col(f, ae), -smax, smax, ne)
    box("wr", col("wr", ae), wr_lb, wr_ub, ne)
    box("wi", col("wi", ae), wi_lb, wi_ub, ne)
    n_nonneg = bld.m - n_zero

    # thermal cones (smax, pf, qf), (smax, pt, qt)
    three = np.ones(ne)
    for name, pcol, qcol in (("sm_fr", "pf", "qf"), ("sm_to", "pt", "qt")):
        bld.add_group(name, 3 * ne, [
            (3 * ae + 1, col(pcol, ae), three),
            (3 * ae + 2, col(qcol, ae), three),
        ], np.stack([-smax, np.zeros(ne), np.zeros(ne)], axis=1).ravel())

    # Jabr product relaxation (w_i/sqrt2, w_j/sqrt2, wr, wi) in Q4r
    bld.add_group("jabr", 4 * ne, [
        (4 * ae, col("w", bfrom), np.full(ne, 1.0 / SQRT2)),
        (4 * ae + 1, col("w", bto), np.full(ne, 1.0 / SQRT2)),
        (4 * ae + 2, col("wr", ae), three),
        (4 * ae + 3, col("wi", ae), three),
    ], np.zeros(4 * ne))

    a, b = bld.matrix()
    cones = [Cone(ZERO, n_zero), Cone(NONNEG, n_nonneg)]
    cones += [Cone(SOC, 3)] * (2 * ne)
    cones += [Cone(RSOC, 4)] * ne

    var_lb = np.concatenate([
        act.gen_param("pgmin"), act.gen_param("qgmin"),
        -smax, -smax, -smax, -smax, vmin**2, wr_lb, wi_lb])
    var_ub = np.concatenate([
        act.gen_param("pgmax"), act.gen_param("qgmax"),
        smax, smax, smax, smax, vmax**2, wr_ub, wi_ub])

    return ConicProblem(
        c=c, a=a, b=b, cones=cones, var_names=var_names,
        row_names=bld.row_names, var_lb=var_lb, var_ub=var_ub,
        meta={"kind": "soc", "active": act,
              "w_bounds": (wr_lb, wr_ub, wi_lb, wi_ub)})


def extract_primal(problem: ConicProblem, result: SolveResult) -> dict[str, np.ndarray]:
    act: ActiveSet = problem.meta["active"]
    x = result.x

    def var(name):
        return x[problem.cols(name)]

    out = {"pg": act.expand_gen(var("pg")), "qg": act.expand_gen(var("qg")),
           "w": var("w").copy()}
    for name in ("pf", "qf", "pt", "qt", "wr", "wi"):
        out[name] = act.expand_branch(var(name))
    return out


def extract_dual(problem: ConicProblem, result: SolveResult) -> dict[str, np.ndarray]:
    act: ActiveSet = problem.meta["active"]
    ne = act.n_branch
    y = result.y

    def rows(name):
        return y[problem.rows(name)]

    def expand_cone(name, width):
        block = rows(name).reshape(ne, width)
        out = np.zeros((act.network.n_branch, width))
        out[act.branches] = block
        return out

    out = {
        "kcl_p": rows("kcl_p").copy(),
        "kcl_q": rows("kcl_q").copy(),
        "ohm_pf": act.expand_branch(rows("ohm_pf")),
        "ohm_qf": act.expand_branch(rows("ohm_qf")),
        "ohm_pt": act.expand_branch(rows("ohm_pt")),
        "ohm_qt": act.expand_branch(rows("ohm_qt")),
        "sm_fr": expand_cone("sm_fr", 3),
        "sm_to": expand_cone("sm_to", 3),
        "jabr": expand_cone("jabr", 4),
        "va_diff_lb": act.expand_branch(rows("va_diff_lb")),
        "va_diff_ub": act.expand_branch(-rows("va_diff_ub")),
        "w_lb": rows("w_lb").copy(),
        "w_ub": -rows("w_ub"),
    }
    for name, expand in (("pg", act.expand_gen), ("qg", act.expand_gen),
                         ("pf", act.expand_branch), ("qf", act.expand_branch),
                         ("pt", act.expand_branch), ("qt", act.expand_branch),
                         ("wr", act.expand_branch), ("wi", act.expand_branch)):
        out[f"{name}_lb"] = expand(rows(f"{name}_lb"))
        out[f"{name}_ub"] = expand(-rows(f"{name}_ub"))
    return out
