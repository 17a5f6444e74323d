"""Constraint-violation evaluation at arbitrary points, grouped per
constraint family with the same names as the serialized dual arrays.

Equality groups report |lhs - rhs|; inequality and bound groups report the
shortfall max(0, violation); second-order cone groups report the norm
shortfall max(0, ||tail|| - head); the product-relaxation group reports
max(0, wr^2 + wi^2 - w_i w_j).  All vectors are full network size, with
zeros in disabled slots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..network import Network
from ..sampling import InstanceInput
from .common import ActiveSet, FormulationError
from .soc import derive_w_bounds

AC_POINT_KEYS = ("pg", "qg", "vm", "va", "pf", "qf", "pt", "qt")
SOC_POINT_KEYS = ("pg", "qg", "w", "wr", "wi", "pf", "qf", "pt", "qt")
DC_POINT_KEYS = ("pg", "va", "pf")


@dataclass
class ResidualReport:
    kind: str
    groups: dict[str, np.ndarray]

    def max_violation(self) -> float:
        return max((float(np.max(v)) if v.size else 0.0)
                   for v in self.groups.values())

    def total_violation(self) -> float:
        return float(sum(v.sum() for v in self.groups.values()))


def evaluate_residuals(kind: str, network: Network, inp: InstanceInput,
                       point: dict[str, np.ndarray]) -> ResidualReport:
    kind = kind.lower()
    if kind == "dc":
        return _dc_residuals(network, inp, point)
    if kind == "soc":
        return _soc_residuals(network, inp, point)
    if kind == "ac":
        return _ac_residuals(network, inp, point)
    raise FormulationError(f"unknown formulation kind {kind!r}")


def _require(point, keys, kind):
    for key in keys:
        if key not in point:
            raise FormulationError(f"{kind} point is missing variable {key!r}")
    return {k: np.asarray(point[k], dtype=float) for k in keys}


def _box(values, lo, hi, active_mask=None):
    lb = np.maximum(0.0, lo - values)
    ub = np.maximum(0.0, values - hi)
    if active_mask is not None:
        lb = np.where(active_mask, lb, 0.0)
        ub = np.where(active_mask, ub, 0.0)
    return lb, ub


def _dc_residuals(net, inp, point):
    p = _require(point, DC_POINT_KEYS, "dc")
    act = ActiveSet(net, inp)
    on_e = inp.branch_status.astype(bool)
    on_g = inp.gen_status.astype(bool)
    pg, va, pf = p["pg"], p["va"], p["pf"]

    inj = np.zeros(net.n_bus)
    np.add.at(inj, np.asarray(net.gen_bus)[on_g], pg[on_g])
    np.add.at(inj, np.asarray(net.branch_from)[on_e], -pf[on_e])
    np.add.at(inj, np.asarray(net.branch_to)[on_e], pf[on_e])
    kcl = np.abs(inj - act.bus_pd - np.asarray(net.gs))

    i, j = np.asarray(net.branch_from), np.asarray(net.branch_to)
    delta = va[i] - va[j]
    ohm = np.where(on_e, np.abs(-np.asarray(net.b) * delta - pf), 0.0)
    ang_lb = np.where(on_e, np.maximum(0.0, np.asarray(net.dva_min) - delta), 0.0)
    ang_ub = np.where(on_e, np.maximum(0.0, delta - np.asarray(net.dva_max)), 0.0)
    pg_lb, pg_ub = _box(pg, np.asarray(net.pgmin), np.asarray(net.pgmax), on_g)
    pf_lb, pf_ub = _box(pf, -np.asarray(net.smax), np.asarray(net.smax), on_e)

    groups = {
        "slack_bus": np.abs(va[[net.ref_bus]]),
        "kcl": kcl,
        "ohm": ohm,
        "va_diff": np.maximum(ang_lb, ang_ub),
        "pg_lb": pg_lb, "pg_ub": pg_ub,
        "pf_lb": pf_lb, "pf_ub": pf_ub,
    }
    return ResidualReport("dc", groups)


def _soc_residuals(net, inp, point):
    p = _require(point, SOC_POINT_KEYS, "soc")
    act = ActiveSet(net, inp)
    on_e = inp.branch_status.astype(bool)
    on_g = inp.gen_status.astype(bool)
    i, j = np.asarray(net.branch_from), np.asarray(net.branch_to)
    w, wr, wi = p["w"], p["wr"], p["wi"]
    gs, bs = np.asarray(net.gs), np.asarray(net.bs)

    inj_p = np.zeros(net.n_bus)
    np.add.at(inj_p, np.asarray(net.gen_bus)[on_g], p["pg"][on_g])
    np.add.at(inj_p, i[on_e], -p["pf"][on_e])
    np.add.at(inj_p, j[on_e], -p["pt"][on_e])
    kcl_p = np.abs(inj_p - act.bus_pd - gs * w)

    inj_q = np.zeros(net.n_bus)
    np.add.at(inj_q, np.asarray(net.gen_bus)[on_g], p["qg"][on_g])
    np.add.at(inj_q, i[on_e], -p["qf"][on_e])
    np.add.at(inj_q, j[on_e], -p["qt"][on_e])
    kcl_q = np.abs(inj_q - act.bus_qd + bs * w)

    gff, bff = np.asarray(net.gff), np.asarray(net.bff)
    gft, bft = np.asarray(net.gft), np.asarray(net.bft)
    gtf, btf = np.asarray(net.gtf), np.asarray(net.btf)
    gtt, btt = np.asarray(net.gtt), np.asarray(net.btt)
    wf, wt = w[i], w[j]
    masked = lambda v: np.where(on_e, v, 0.0)  # noqa: E731

    ohm_pf = masked(np.abs(gff * wf + gft * wr + bft * wi - p["pf"]))
    ohm_qf = masked(np.abs(-bff * wf - bft * wr + gft * wi - p["qf"]))
    ohm_pt = masked(np.abs(gtt * wt + gtf * wr - btf * wi - p["pt"]))
    ohm_qt = masked(np.abs(-btt * wt - btf * wr - gtf * wi - p["qt"]))

    smax = np.asarray(net.smax)
    sm_fr = masked(np.maximum(0.0, np.hypot(p["pf"], p["qf"]) - smax))
    sm_to = masked(np.maximum(0.0, np.hypot(p["pt"], p["qt"]) - smax))
    jabr = masked(np.maximum(0.0, wr**2 + wi**2 - wf * wt))

    tan_lo = np.tan(np.asarray(net.dva_min))
    tan_hi = np.tan(np.asarray(net.dva_max))
    va_lb = masked(np.maximum(0.0, tan_lo * wr - wi))
    va_ub = masked(np.maximum(0.0, wi - tan_hi * wr))

    wr_lo, wr_hi, wi_lo, wi_hi = derive_w_bounds(
        np.asarray(net.vmin)[i], np.asarray(net.vmax)[i],
        np.asarray(net.vmin)[j], np.asarray(net.vmax)[j],
        np.asarray(net.dva_min), np.asarray(net.dva_max))

    groups = {"kcl_p": kcl_p, "kcl_q": kcl_q,
              "ohm_pf": ohm_pf, "ohm_qf": ohm_qf,
              "ohm_pt": ohm_pt, "ohm_qt": ohm_qt,
              "sm_fr": sm_fr, "sm_to": sm_to, "jabr": jabr,
              "va_diff_lb": va_lb, "va_diff_ub": va_ub}
    groups["w_lb"], groups["w_ub"] = _box(w, np.asarray(net.vmin)**2,
                                          np.asarray(net.vmax)**2)
    groups["wr_lb"], groups["wr_ub"] = _box(wr, wr_lo, wr_hi, on_e)
    groups["wi_lb"], groups["wi_ub"] = _box(wi, wi_lo, wi_hi, on_e)
    groups["pg_lb"], groups["pg_ub"] = _box(p["pg"], np.asarray(net.pgmin),
                                            np.asarray(net.pgmax), on_g)
    groups["qg_lb"], groups["qg_ub"] = _box(p["qg"], np.asarray(net.qgmin),
                                            np.asarray(net.qgmax), on_g)
    for f in ("pf", "qf", "pt", "qt"):
        groups[f"{f}_lb"], groups[f"{f}_ub"] = _box(p[f], -smax, smax, on_e)
    return ResidualReport("soc", groups)


def _ac_residuals(net, inp, point):
    p = _require(point, AC_POINT_KEYS, "ac")
    act = ActiveSet(net, inp)
    on_e = inp.branch_status.astype(bool)
    on_g = inp.gen_status.astype(bool)
    i, j = np.asarray(net.branch_from), np.asarray(net.branch_to)
    vm, va = p["vm"], p["va"]
    gs, bs = np.asarray(net.gs), np.asarray(net.bs)

    inj_p = np.zeros(net.n_bus)
    np.add.at(inj_p, np.asarray(net.gen_bus)[on_g], p["pg"][on_g])
    np.add.at(inj_p, i[on_e], -p["pf"][on_e])
    np.add.at(inj_p, j[on_e], -p["pt"][on_e])
    kcl_p = np.abs(inj_p - act.bus_pd - gs * vm**2)

    inj_q = np.zeros(net.n_bus)
    np.add.at(inj_q, np.asarray(net.gen_bus)[on_g], p["qg"][on_g])
    np.add.at(inj_q, i[on_e], -p["qf"][on_e])
    np.add.at(inj_q, j[on_e], -p["qt"][on_e])
    kcl_q = np.abs(inj_q - act.bus_qd + bs * vm**2)

    u, v = vm[i], vm[j]
    delta = va[i] - va[j]
    cs, sn = np.cos(delta), np.sin(delta)
    uv = u * v
    gff, bff = np.asarray(net.gff), np.asarray(net.bff)
    gft, bft = np.asarray(net.gft), np.asarray(net.bft)
    gtf, btf = np.asarray(net.gtf), np.asarray(net.btf)
    gtt, btt = np.asarray(net.gtt), np.asarray(net.btt)
    masked = lambda x: np.where(on_e, x, 0.0)  # noqa: E731

    ohm_pf = masked(np.abs(gff * u**2 + uv * (gft * cs + bft * sn) - p["pf"]))
    ohm_qf = masked(np.abs(-bff * u**2 + uv * (-bft * cs + gft * sn) - p["qf"]))
    ohm_pt = masked(np.abs(gtt * v**2 + uv * (gtf * cs - btf * sn) - p["pt"]))
    ohm_qt = masked(np.abs(-btt * v**2 + uv * (-btf * cs - gtf * sn) - p["qt"]))

    smax = np.asarray(net.smax)
    sm_fr = masked(np.maximum(0.0, np.hypot(p["pf"], p["qf"]) - smax))
    sm_to = masked(np.maximum(0.0, np.hypot(p["pt"], p["qt"]) - smax))
    ang_lb = masked(np.maximum(0.0, np.asarray(net.dva_min) - delta))
    ang_ub = masked(np.maximum(0.0, delta - np.asarray(net.dva_max)))

    groups = {
        "slack_bus": np.abs(va[[net.ref_bus]]),
        "kcl_p": kcl_p, "kcl_q": kcl_q,
        "ohm_pf": ohm_pf, "ohm_qf": ohm_qf,
        "ohm_pt": ohm_pt, "ohm_qt": ohm_qt,
        "sm_fr": sm_fr, "sm_to": sm_to,
        "va_diff": np.maximum(ang_lb, ang_ub),
    }
    groups["pg_lb"], groups["pg_ub"] = _box(p["pg"], np.asarray(net.pgmin),
                                            np.asarray(net.pgmax), on_g)
    groups["qg_lb"], groups["qg_ub"] = _box(p["qg"], np.asarray(net.qgmin),
                                            np.asarray(net.qgmax), on_g)
    groups["vm_lb"], groups["vm_ub"] = _box(vm, np.asarray(net.vmin),
                                            np.asarray(net.vmax))
    for f in ("pf", "qf", "pt", "qt"):
        groups[f"{f}_lb"], groups[f"{f}_ub"] = _box(p[f], -smax, smax, on_e)
    return ResidualReport("ac", groups)
