"""Dual-side verification: dual objectives, dual feasibility, weak-duality
certificates, and KKT residuals for the nonlinear formulation.

Everything here recomputes quantities from the network data and the named
dual arrays directly, independent of the matrices the solvers consumed, so
it cross-checks the whole build/solve/extract pipeline.

Sign conventions follow the stored layout: equality duals are free,
lower-bound duals are >= 0, upper-bound duals are <= 0. Where a serialized
table keeps a single signed angle dual, it is split by sign into its two
one-sided multipliers.
"""

from __future__ import annotations

import numpy as np

from .formulations.ac import AcopfNlp
from .formulations.common import ActiveSet
from .formulations.residuals import ResidualReport
from .formulations.soc import derive_w_bounds
from .network import Network
from .sampling import InstanceInput

SQRT2 = np.sqrt(2.0)


class DualityError(ValueError):
    pass


def _angle_duals(duals, branch_count):
    """(lower, upper) one-sided angle duals from either key layout."""
    if "va_diff_lb" in duals and "va_diff_ub" in duals:
        return (np.asarray(duals["va_diff_lb"], dtype=float),
                np.asarray(duals["va_diff_ub"], dtype=float))
    va = np.asarray(duals["va_diff"], dtype=float)
    return np.maximum(va, 0.0), np.minimum(va, 0.0)


def _need(duals, *keys):
    out = []
    for key in keys:
        if key not in duals:
            raise DualityError(f"missing dual key {key!r}")
        out.append(np.asarray(duals[key], dtype=float))
    return out


def dual_objective_dc(network: Network, inp: InstanceInput, duals) -> float:
    """Dual objective of the linear formulation from named dual arrays."""
    act = ActiveSet(network, inp)
    lam, = _need(duals, "kcl")
    pg_lb, pg_ub = _need(duals, "pg_lb", "pg_ub")
    pf_lb, pf_ub = _need(duals, "pf_lb", "pf_ub")
    th_lb, th_ub = _angle_duals(duals, network.n_branch)

    obj = float(lam @ (np.asarray(network.gs) + act.bus_pd))
    obj += float(np.asarray(network.pgmin) @ pg_lb
                 + np.asarray(network.pgmax) @ pg_ub)
    smax = np.asarray(network.smax)
    obj += float(np.asarray(network.dva_min) @ th_lb
                 + np.asarray(network.dva_max) @ th_ub
                 - smax @ pf_lb + smax @ pf_ub)
    return obj


def dual_objective_soc(network: Network, inp: InstanceInput, duals) -> float:
    """Dual objective of the cone relaxation from named dual arrays."""
    act = ActiveSet(network, inp)
    lam_p, lam_q = _need(duals, "kcl_p", "kcl_q")
    obj = float(lam_p @ act.bus_pd + lam_q @ act.bus_qd)
    for name, lo, hi in (("pg", network.pgmin, network.pgmax),
                         ("qg", network.qgmin, network.qgmax)):
        d_lb, d_ub = _need(duals, f"{name}_lb", f"{name}_ub")
        obj += float(np.asarray(lo) @ d_lb + np.asarray(hi) @ d_ub)
    w_lb, w_ub = _need(duals, "w_lb", "w_ub")
    obj += float((np.asarray(network.vmin) ** 2) @ w_lb
                 + (np.asarray(network.vmax) ** 2) @ w_ub)

    smax = np.asarray(network.smax)
    sm_fr, sm_to = _need(duals, "sm_fr", "sm_to")
    cone_sum = sm_fr[:, 0] + sm_to[:, 0]
    for name in ("pf", "qf", "pt", "qt"):
        d_lb, d_ub = _need(duals, f"{name}_lb", f"{name}_ub")
        cone_sum = cone_sum + d_lb - d_ub
    obj += float(-(smax @ cone_sum))

    i, j = np.asarray(network.branch_from), np.asarray(network.branch_to)
    wr_lo, wr_hi, wi_lo, wi_hi = derive_w_bounds(
        np.asarray(network.vmin)[i], np.asarray(network.vmax)[i],
        np.asarray(network.vmin)[j], np.asarray(network.vmax)[j],
        np.asarray(network.dva_min), np.asarray(network.dva_max))
    wr_lb, wr_ub = _need(duals, "wr_lb", "wr_ub")
    wi_lb, wi_ub = _need(duals, "wi_lb", "wi_ub")
    obj += float(wr_lo @ wr_lb + wr_hi @ wr_ub + wi_lo @ wi_lb + wi_hi @ wi_ub)
    return obj


def dual_feasibility_residuals(kind: str, network: Network, inp: InstanceInput,
                               duals) -> ResidualReport:
    kind = kind.lower()
    if kind == "dc":
        return _dc_dual_residuals(network, inp, duals)
    if kind == "soc":
        return _soc_dual_residuals(network, inp, duals)
    raise DualityError(f"dual feasibility is defined for dc/soc, not {kind!r}")


def _sign_groups(groups, duals, names):
    for name in names:
        lb = np.asarray(duals[f"{name}_lb"], dtype=float)
        ub = np.asarray(duals[f"{name}_ub"], dtype=float)
        groups[f"{name}_lb"] = np.maximum(0.0, -lb)
        groups[f"{name}_ub"] = np.maximum(0.0, ub)


def _dc_dual_residuals(net, inp, duals):
    act = ActiveSet(net, inp)
    on_e = inp.branch_status.astype(bool)
    on_g = inp.gen_status.astype(bool)
    lam, lam_pf, slack = _need(duals, "kcl", "ohm", "slack_bus")
    pg_lb, pg_ub = _need(duals, "pg_lb", "pg_ub")
    pf_lb, pf_ub = _need(duals, "pf_lb", "pf_ub")
    th_lb, th_ub = _angle_duals(duals, net.n_branch)
    i, j = np.asarray(net.branch_from), np.asarray(net.branch_to)
    b = np.asarray(net.b)

    # generator column: lam_i + mu_lb + mu_ub = c
    r_pg = lam[np.asarray(net.gen_bus)] + pg_lb + pg_ub - np.asarray(net.cost)
    r_pg = np.where(on_g, np.abs(r_pg), 0.0)

    # flow column: -lam_i + lam_j - lam_ohm + mu_lb + mu_ub = 0
    r_pf = -lam[i] + lam[j] - lam_pf + pf_lb + pf_ub
    r_pf = np.where(on_e, np.abs(r_pf), 0.0)

    # angle column: branch terms enter + on the from-bus row, - on the to-bus
    r_va = np.zeros(net.n_bus)
    term = -b * lam_pf + th_lb + th_ub
    np.add.at(r_va, i[on_e], term[on_e])
    np.add.at(r_va, j[on_e], -term[on_e])
    r_va[net.ref_bus] += float(np.asarray(slack).ravel()[0])
    r_va = np.abs(r_va)

    groups = {"pg": r_pg, "ohm": r_pf, "va": r_va}
    _sign_groups(groups, duals, ("pg", "pf"))
    groups["va_diff_lb"] = np.maximum(0.0, -th_lb)
    groups["va_diff_ub"] = np.maximum(0.0, th_ub)
    return ResidualReport("dc-dual", groups)


def _soc_dual_residuals(net, inp, duals):
    on_e = inp.branch_status.astype(bool)
    on_g = inp.gen_status.astype(bool)
    lam_p, lam_q = _need(duals, "kcl_p", "kcl_q")
    l_pf, l_qf, l_pt, l_qt = _need(duals, "ohm_pf", "ohm_qf", "ohm_pt", "ohm_qt")
    sm_fr, sm_to, jabr = _need(duals, "sm_fr", "sm_to", "jabr")
    th_lb, th_ub = _need(duals, "va_diff_lb", "va_diff_ub")
    i, j = np.asarray(net.branch_from), np.asarray(net.branch_to)
    gbus = np.asarray(net.gen_bus)

    def d(name):
        return np.asarray(duals[name], dtype=float)

    gff, bff = np.asarray(net.gff), np.asarray(net.bff)
    gft, bft = np.asarray(net.gft), np.asarray(net.bft)
    gtf, btf = np.asarray(net.gtf), np.asarray(net.btf)
    gtt, btt = np.asarray(net.gtt), np.asarray(net.btt)

    r_pg = lam_p[gbus] + d("pg_lb") + d("pg_ub") - np.asarray(net.cost)
    r_qg = lam_q[gbus] + d("qg_lb") + d("qg_ub")
    r_pg = np.where(on_g, np.abs(r_pg), 0.0)
    r_qg = np.where(on_g, np.abs(r_qg), 0.0)

    nu_pf, nu_qf = sm_fr[:, 1], sm_fr[:, 2]
    nu_pt, nu_qt = sm_to[:, 1], sm_to[:, 2]
    r_pf = -lam_p[i] - l_pf + nu_pf + d("pf_lb") + d("pf_ub")
    r_qf = -lam_q[i] - l_qf + nu_qf + d("qf_lb") + d("qf_ub")
    r_pt = -lam_p[j] - l_pt + nu_pt + d("pt_lb") + d("pt_ub")
    r_qt = -lam_q[j] - l_qt + nu_qt + d("qt_lb") + d("qt_ub")

    # lifted square-voltage column
    om_f, om_t = jabr[:, 0], jabr[:, 1]
    om_re, om_im = jabr[:, 2], jabr[:, 3]
    r_w = -np.asarray(net.gs) * lam_p + np.asarray(net.bs) * lam_q \
        + d("w_lb") + d("w_ub")
    term_f = gff * l_pf - bff * l_qf + om_f / SQRT2
    term_t = gtt * l_pt - btt * l_qt + om_t / SQRT2
    r_w_b = np.zeros(net.n_bus)
    np.add.at(r_w_b, i[on_e], term_f[on_e])
    np.add.at(r_w_b, j[on_e], term_t[on_e])
    r_w = np.abs(r_w + r_w_b)

    tan_lo = np.tan(np.asarray(net.dva_min))
    tan_hi = np.tan(np.asarray(net.dva_max))
    r_wr = gft * l_pf + gtf * l_pt - bft * l_qf - btf * l_qt \
        - tan_lo * th_lb - tan_hi * th_ub + om_re + d("wr_lb") + d("wr_ub")
    r_wi = bft * l_pf - btf * l_pt + gft * l_qf - gtf * l_qt \
        + th_lb + th_ub + om_im + d("wi_lb") + d("wi_ub")

    def on_branch(v):
        return np.where(on_e, v, 0.0)

    groups = {
        "pg": r_pg, "qg": r_qg,
        "pf": on_branch(np.abs(r_pf)), "qf": on_branch(np.abs(r_qf)),
        "pt": on_branch(np.abs(r_pt)), "qt": on_branch(np.abs(r_qt)),
        "w": r_w,
        "wr": on_branch(np.abs(r_wr)), "wi": on_branch(np.abs(r_wi)),
        "sm_fr": on_branch(_soc3_shortfall(sm_fr)),
        "sm_to": on_branch(_soc3_shortfall(sm_to)),
        "jabr": on_branch(_rotated4_shortfall(jabr)),
        "va_diff_lb": np.maximum(0.0, -th_lb),
        "va_diff_ub": np.maximum(0.0, th_ub),
    }
    _sign_groups(groups, duals, ("pg", "qg", "w", "pf", "qf", "pt", "qt",
                                 "wr", "wi"))
    return ResidualReport("soc-dual", groups)


def _soc3_shortfall(block: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, np.hypot(block[:, 1], block[:, 2]) - block[:, 0])


def _rotated4_shortfall(block: np.ndarray) -> np.ndarray:
    head = (block[:, 0] + block[:, 1]) / SQRT2
    tail = np.sqrt(((block[:, 0] - block[:, 1]) / SQRT2) ** 2
                   + block[:, 2] ** 2 + block[:, 3] ** 2)
    return np.maximum(0.0, tail - head)


def weak_duality_certificate(kind: str, network: Network, inp: InstanceInput,
                             duals, primal_objective: float,
                             tolerance: float = 1e-6) -> dict:
    """Validate dual feasibility and return the implied objective bound."""
    report = dual_feasibility_residuals(kind, network, inp, duals)
    worst = report.max_violation()
    if worst > tolerance:
        raise DualityError(
            f"duals are not feasible (max residual {worst:.3e} > {tolerance:g}); "
            f"no bound certificate")
    bound = (dual_objective_dc if kind.lower() == "dc"
             else dual_objective_soc)(network, inp, duals)
    return {"valid_bound": bound, "gap": primal_objective - bound}


# ---------------------------------------------------------------------------
# nonlinear formulation: KKT residual verification


def kkt_residuals_ac(network: Network, inp: InstanceInput, primal,
                     duals) -> ResidualReport:
    """First-order optimality residuals of the nonlinear formulation.

    Groups: stationarity, primal-eq, primal-ineq, dual-sign, complementarity,
    each a vector of infinity-norm-able violations.
    """
    nlp = AcopfNlp(network, inp)
    act = nlp.act

    x = np.zeros(nlp.n)
    for name in ("pg", "qg"):
        x[nlp.var_names[name]] = np.asarray(primal[name], dtype=float)[act.gens]
    for name in ("pf", "qf", "pt", "qt"):
        x[nlp.var_names[name]] = np.asarray(primal[name], dtype=float)[act.branches]
    x[nlp.var_names["vm"]] = np.asarray(primal["vm"], dtype=float)
    x[nlp.var_names["va"]] = np.asarray(primal["va"], dtype=float)

    lam = np.zeros(nlp.n_eq)
    for name in ("kcl_p", "kcl_q"):
        lam[nlp.eq_names[name]] = np.asarray(duals[name], dtype=float)
    for name in ("ohm_pf", "ohm_qf", "ohm_pt", "ohm_qt"):
        lam[nlp.eq_names[name]] = np.asarray(duals[name], dtype=float)[act.branches]
    lam[nlp.eq_names["slack_bus"]] = np.asarray(duals["slack_bus"]).ravel()

    mug = np.zeros(nlp.n_ineq)
    mug[nlp.ineq_names["sm_fr"]] = -np.asarray(duals["sm_fr"])[act.branches]
    mug[nlp.ineq_names["sm_to"]] = -np.asarray(duals["sm_to"])[act.branches]
    va_diff = np.asarray(duals["va_diff"], dtype=float)[act.branches]
    mug[nlp.ineq_names["va_diff_lb"]] = np.maximum(va_diff, 0.0)
    mug[nlp.ineq_names["va_diff_ub"]] = np.maximum(-va_diff, 0.0)

    zl = np.zeros(nlp.n)
    zu = np.zeros(nlp.n)
    for name, pick in (("pg", act.gens), ("qg", act.gens),
                       ("pf", act.branches), ("qf", act.branches),
                       ("pt", act.branches), ("qt", act.branches)):
        zl[nlp.var_names[name]] = np.asarray(duals[f"{name}_lb"], dtype=float)[pick]
        zu[nlp.var_names[name]] = -np.asarray(duals[f"{name}_ub"], dtype=float)[pick]
    zl[nlp.var_names["vm"]] = np.asarray(duals["vm_lb"], dtype=float)
    zu[nlp.var_names["vm"]] = -np.asarray(duals["vm_ub"], dtype=float)

    # assemble eq-(2) form: bounds fold into the inequality side
    stat = nlp.grad(x) - nlp.jac_eq(x).T @ lam - nlp.jac_ineq(x).T @ mug \
        - zl + zu
    h = nlp.eq(x)
    g = nlp.ineq(x)
    bounded_lb = np.isfinite(nlp.var_lb)
    bounded_ub = np.isfinite(nlp.var_ub)
    g_lb = (x - nlp.var_lb)[bounded_lb]
    g_ub = (nlp.var_ub - x)[bounded_ub]

    all_mu = np.concatenate([mug, zl[bounded_lb], zu[bounded_ub]])
    all_g = np.concatenate([g, g_lb, g_ub])

    groups = {
        "stationarity": np.abs(stat),
        "primal-eq": np.abs(h),
        "primal-ineq": np.maximum(0.0, -all_g),
        "dual-sign": np.maximum(0.0, -all_mu),
        "complementarity": np.abs(all_mu * all_g),
    }
    return ResidualReport("ac-kkt", groups)
