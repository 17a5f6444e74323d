"""AC optimal power flow in polar voltage coordinates.

Nonlinear program with variables (pg, qg, pf, qf, pt, qt, vm, va):
linear cost, quadratic shunt terms in the nodal balance, trigonometric
branch-flow equalities, quadratic thermal limits, and linear angle windows.
First and second derivatives are assembled analytically.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..network import Network
from ..sampling import InstanceInput
from ..solvers.result import SolveResult
from .common import ActiveSet


class AcopfNlp:
    """NLP for one AC-OPF instance (implements the NlpProblem protocol).

    With ``distance_target`` set, the linear cost is replaced by the squared
    Euclidean distance to the target point (used by the projection metric).
    """

    def __init__(self, network: Network, inp: InstanceInput,
                 distance_target: np.ndarray | None = None):
        act = ActiveSet(network, inp)
        self.network = network
        self.act = act
        ng, ne, nb = act.n_gen, act.n_branch, network.n_bus
        self.ng, self.ne, self.nb = ng, ne, nb

        names = [("pg", ng), ("qg", ng), ("pf", ne), ("qf", ne),
                 ("pt", ne), ("qt", ne), ("vm", nb), ("va", nb)]
        self.var_names: dict[str, slice] = {}
        pos = 0
        for name, size in names:
            self.var_names[name] = slice(pos, pos + size)
            pos += size
        self.n = pos

        smax = act.branch_param("smax")
        self.smax = smax
        self.cost = act.gen_param("cost")
        self.var_lb = np.concatenate([
            act.gen_param("pgmin"), act.gen_param("qgmin"),
            -smax, -smax, -smax, -smax,
            np.asarray(network.vmin), np.full(nb, -np.inf)])
        self.var_ub = np.concatenate([
            act.gen_param("pgmax"), act.gen_param("qgmax"),
            smax, smax, smax, smax,
            np.asarray(network.vmax), np.full(nb, np.inf)])
        self.distance_target = distance_target

        self.eq_names = {}
        pos = 0
        for name, size in (("kcl_p", nb), ("kcl_q", nb), ("ohm_pf", ne),
                           ("ohm_qf", ne), ("ohm_pt", ne), ("ohm_qt", ne),
                           ("slack_bus", 1)):
            self.eq_names[name] = slice(pos, pos + size)
            pos += size
        self.n_eq = pos
        self.ineq_names = {}
        pos = 0
        for name, size in (("sm_fr", ne), ("sm_to", ne),
                           ("va_diff_lb", ne), ("va_diff_ub", ne)):
            self.ineq_names[name] = slice(pos, pos + size)
            pos += size
        self.n_ineq = pos

        self._jac_cache_x: np.ndarray | None = None

    # -- helpers -----------------------------------------------------------

    def split(self, x: np.ndarray) -> dict[str, np.ndarray]:
        return {k: x[s] for k, s in self.var_names.items()}

    def col(self, name: str, idx) -> np.ndarray:
        return self.var_names[name].start + np.asarray(idx, dtype=np.int64)

    def initial_point(self) -> np.ndarray:
        act = self.act
        x = np.zeros(self.n)
        x[self.var_names["pg"]] = 0.5 * (act.gen_param("pgmin") + act.gen_param("pgmax"))
        x[self.var_names["qg"]] = 0.5 * (act.gen_param("qgmin") + act.gen_param("qgmax"))
        x[self.var_names["vm"]] = 0.5 * (np.asarray(self.network.vmin)
                                         + np.asarray(self.network.vmax))
        return x

    def _trig(self, x: np.ndarray):
        act = self.act
        vm = x[self.var_names["vm"]]
        va = x[self.var_names["va"]]
        i, j = act.branch_from, act.branch_to
        u, v = vm[i], vm[j]
        delta = va[i] - va[j]
        cs, sn = np.cos(delta), np.sin(delta)
        gft, bft = act.branch_param("gft"), act.branch_param("bft")
        gtf, btf = act.branch_param("gtf"), act.branch_param("btf")
        # the four trig kernels K and derivatives K' (K'' = -K)
        k = np.stack([gft * cs + bft * sn, -bft * cs + gft * sn,
                      gtf * cs - btf * sn, -btf * cs - gtf * sn])
        kp = np.stack([-gft * sn + bft * cs, bft * sn + gft * cs,
                       -gtf * sn - btf * cs, btf * sn - gtf * cs])
        return u, v, k, kp

    # -- objective ---------------------------------------------------------

    def objective(self, x: np.ndarray) -> float:
        if self.distance_target is not None:
            d = x - self.distance_target
            return 0.5 * float(d @ d)
        return float(self.cost @ x[self.var_names["pg"]])

    def grad(self, x: np.ndarray) -> np.ndarray:
        if self.distance_target is not None:
            return x - self.distance_target
        g = np.zeros(self.n)
        g[self.var_names["pg"]] = self.cost
        return g

    # -- constraints ---------------------------------------------------------

    def eq(self, x: np.ndarray) -> np.ndarray:
        act, net = self.act, self.network
        s = self.split(x)
        u, v, k, _ = self._trig(x)
        gff, bff = act.branch_param("gff"), act.branch_param("bff")
        gtt, btt = act.branch_param("gtt"), act.branch_param("btt")
        uv = u * v

        out = np.empty(self.n_eq)
        kcl_p = np.zeros(self.nb)
        np.add.at(kcl_p, act.gen_bus, s["pg"])
        kcl_p -= act.bus_pd + np.asarray(net.gs) * s["vm"] ** 2
        np.add.at(kcl_p, act.branch_from, -s["pf"])
        np.add.at(kcl_p, act.branch_to, -s["pt"])
        out[self.eq_names["kcl_p"]] = kcl_p

        kcl_q = np.zeros(self.nb)
        np.add.at(kcl_q, act.gen_bus, s["qg"])
        kcl_q += -act.bus_qd + np.asarray(net.bs) * s["vm"] ** 2
        np.add.at(kcl_q, act.branch_from, -s["qf"])
        np.add.at(kcl_q, act.branch_to, -s["qt"])
        out[self.eq_names["kcl_q"]] = kcl_q

        out[self.eq_names["ohm_pf"]] = gff * u**2 + uv * k[0] - s["pf"]
        out[self.eq_names["ohm_qf"]] = -bff * u**2 + uv * k[1] - s["qf"]
        out[self.eq_names["ohm_pt"]] = gtt * v**2 + uv * k[2] - s["pt"]
        out[self.eq_names["ohm_qt"]] = -btt * v**2 + uv * k[3] - s["qt"]
        out[self.eq_names["slack_bus"]] = s["va"][net.ref_bus]
        return out

    def jac_eq(self, x: np.ndarray) -> sp.csr_matrix:
        act, net = self.act, self.network
        ng, ne, nb = self.ng, self.ne, self.nb
        u, v, k, kp = self._trig(x)
        vm = x[self.var_names["vm"]]
        gff, bff = act.branch_param("gff"), act.branch_param("bff")
        gtt, btt = act.branch_param("gtt"), act.branch_param("btt")
        i, j = act.branch_from, act.branch_to
        ae, ag = np.arange(ne), np.arange(ng)
        ones_e, ones_g = np.ones(ne), np.ones(ng)

        rows, cols, vals = [], [], []

        def add(r, c, d):
            rows.append(np.asarray(r, dtype=np.int64))
            cols.append(np.asarray(c, dtype=np.int64))
            vals.append(np.asarray(d, dtype=float))

        off = self.eq_names["kcl_p"].start
        add(off + act.gen_bus, self.col("pg", ag), ones_g)
        add(off + np.arange(nb), self.col("vm", np.arange(nb)),
            -2.0 * np.asarray(net.gs) * vm)
        add(off + i, self.col("pf", ae), -ones_e)
        add(off + j, self.col("pt", ae), -ones_e)

        off = self.eq_names["kcl_q"].start
        add(off + act.gen_bus, self.col("qg", ag), ones_g)
        add(off + np.arange(nb), self.col("vm", np.arange(nb)),
            2.0 * np.asarray(net.bs) * vm)
        add(off + i, self.col("qf", ae), -ones_e)
        add(off + j, self.col("qt", ae), -ones_e)

        uv = u * v
        # d/du, d/dv, d/ddelta per equation family; flow variable enters as -1
        for name, fvar, du, dv, dd in (
            ("ohm_pf", "pf", 2.0 * gff * u + v * k[0], u * k[0], uv * kp[0]),
            ("ohm_qf", "qf", -2.0 * bff * u + v * k[1], u * k[1], uv * kp[1]),
            ("ohm_pt", "pt", v * k[2], 2.0 * gtt * v + u * k[2], uv * kp[2]),
            ("ohm_qt", "qt", v * k[3], -2.0 * btt * v + u * k[3], uv * kp[3]),
        ):
            off = self.eq_names[name].start
            add(off + ae, self.col("vm", i), du)
            add(off + ae, self.col("vm", j), dv)
            add(off + ae, self.col("va", i), dd)
            add(off + ae, self.col("va", j), -dd)
            add(off + ae, self.col(fvar, ae), -ones_e)

        off = self.eq_names["slack_bus"].start
        add([off], [self.col("va", net.ref_bus)], [1.0])

        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_eq, self.n))

    def ineq(self, x: np.ndarray) -> np.ndarray:
        act = self.act
        s = self.split(x)
        va = s["va"]
        delta = va[act.branch_from] - va[act.branch_to]
        out = np.empty(self.n_ineq)
        out[self.ineq_names["sm_fr"]] = self.smax**2 - s["pf"]**2 - s["qf"]**2
        out[self.ineq_names["sm_to"]] = self.smax**2 - s["pt"]**2 - s["qt"]**2
        out[self.ineq_names["va_diff_lb"]] = delta - act.branch_param("dva_min")
        out[self.ineq_names["va_diff_ub"]] = act.branch_param("dva_max") - delta
        return out

    def jac_ineq(self, x: np.ndarray) -> sp.csr_matrix:
        act = self.act
        ne = self.ne
        s = self.split(x)
        ae = np.arange(ne)
        ones_e = np.ones(ne)
        i, j = act.branch_from, act.branch_to
        rows, cols, vals = [], [], []

        def add(r, c, d):
            rows.append(np.asarray(r, dtype=np.int64))
            cols.append(np.asarray(c, dtype=np.int64))
            vals.append(np.asarray(d, dtype=float))

        off = self.ineq_names["sm_fr"].start
        add(off + ae, self.col("pf", ae), -2.0 * s["pf"])
        add(off + ae, self.col("qf", ae), -2.0 * s["qf"])
        off = self.ineq_names["sm_to"].start
        add(off + ae, self.col("pt", ae), -2.0 * s["pt"])
        add(off + ae, self.col("qt", ae), -2.0 * s["qt"])
        off = self.ineq_names["va_diff_lb"].start
        add(off + ae, self.col("va", i), ones_e)
        add(off + ae, self.col("va", j), -ones_e)
        off = self.ineq_names["va_diff_ub"].start
        add(off + ae, self.col("va", i), -ones_e)
        add(off + ae, self.col("va", j), ones_e)

        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_ineq, self.n))

    def lag_hess(self, x: np.ndarray, lam_eq: np.ndarray,
                 lam_ineq: np.ndarray) -> sp.csr_matrix:
        """Hessian of f - lam_eq'h - lam_ineq'g (upper and lower triangles)."""
        act, net = self.act, self.network
        ne, nb = self.ne, self.nb
        u, v, k, kp = self._trig(x)
        vm = x[self.var_names["vm"]]
        gff, bff = act.branch_param("gff"), act.branch_param("bff")
        gtt, btt = act.branch_param("gtt"), act.branch_param("btt")
        i, j = act.branch_from, act.branch_to
        ae = np.arange(ne)

        rows, cols, vals = [], [], []

        def add_sym(r, c, d):
            r = np.asarray(r, dtype=np.int64)
            c = np.asarray(c, dtype=np.int64)
            d = np.asarray(d, dtype=float)
            rows.append(r)
            cols.append(c)
            vals.append(d)
            mask = r != c
            if mask.any():
                rows.append(c[mask])
                cols.append(r[mask])
                vals.append(d[mask])

        lam = {name: lam_eq[slc] for name, slc in self.eq_names.items()}
        mug = {name: lam_ineq[slc] for name, slc in self.ineq_names.items()}

        # shunt curvature from nodal balance
        diag_vm = 2.0 * np.asarray(net.gs) * lam["kcl_p"] \
            - 2.0 * np.asarray(net.bs) * lam["kcl_q"]
        add_sym(self.col("vm", np.arange(nb)), self.col("vm", np.arange(nb)),
                diag_vm)

        # branch flow curvature: four kernels of the form
        #   a_uu u^2/2.. handled per family with (uu, vv, uv, udelta, vdelta, dd)
        fam = (
            (lam["ohm_pf"], 2.0 * gff, np.zeros(ne), k[0], v * kp[0], u * kp[0],
             -u * v * k[0]),
            (lam["ohm_qf"], -2.0 * bff, np.zeros(ne), k[1], v * kp[1], u * kp[1],
             -u * v * k[1]),
            (lam["ohm_pt"], np.zeros(ne), 2.0 * gtt, k[2], v * kp[2], u * kp[2],
             -u * v * k[2]),
            (lam["ohm_qt"], np.zeros(ne), -2.0 * btt, k[3], v * kp[3], u * kp[3],
             -u * v * k[3]),
        )
        ui, vj = self.col("vm", i), self.col("vm", j)
        ti, tj = self.col("va", i), self.col("va", j)
        for lm, huu, hvv, huv, hud, hvd, hdd in fam:
            w = -lm  # lagrangian carries -lam * h
            add_sym(ui, ui, w * huu)
            add_sym(vj, vj, w * hvv)
            add_sym(ui, vj, w * huv)
            add_sym(ui, ti, w * hud)
            add_sym(ui, tj, -w * hud)
            add_sym(vj, ti, w * hvd)
            add_sym(vj, tj, -w * hvd)
            add_sym(ti, ti, w * hdd)
            add_sym(tj, tj, w * hdd)
            add_sym(ti, tj, -w * hdd)

        # thermal curvature: g = smax^2 - p^2 - q^2 -> hess(-mug * g) = 2 mug I
        for name, pvar, qvar in (("sm_fr", "pf", "qf"), ("sm_to", "pt", "qt")):
            w = 2.0 * mug[name]
            add_sym(self.col(pvar, ae), self.col(pvar, ae), w)
            add_sym(self.col(qvar, ae), self.col(qvar, ae), w)

        if self.distance_target is not None:
            allv = np.arange(self.n)
            add_sym(allv, allv, np.ones(self.n))

        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n, self.n))


def build_acopf(network: Network, inp: InstanceInput) -> AcopfNlp:
    return AcopfNlp(network, inp)


def extract_primal(problem: AcopfNlp, result: SolveResult) -> dict[str, np.ndarray]:
    act = problem.act
    x = result.x

    def var(name):
        return x[problem.var_names[name]]

    out = {"pg": act.expand_gen(var("pg")), "qg": act.expand_gen(var("qg")),
           "vm": var("vm").copy(), "va": var("va").copy()}
    for name in ("pf", "qf", "pt", "qt"):
        out[name] = act.expand_branch(var(name))
    return out


def extract_dual(problem: AcopfNlp, result: SolveResult) -> dict[str, np.ndarray]:
    """Table-style duals: equality multipliers as returned; thermal-cone and
    upper-bound duals nonpositive; angle dual is the signed sum of sides."""
    act = problem.act
    lam = result.lam_eq
    mug = result.lam_ineq
    zl, zu = result.z_lb, result.z_ub

    def eqrow(name):
        return lam[problem.eq_names[name]]

    def inrow(name):
        return mug[problem.ineq_names[name]]

    out = {
        "slack_bus": eqrow("slack_bus").copy(),
        "kcl_p": eqrow("kcl_p").copy(),
        "kcl_q": eqrow("kcl_q").copy(),
        "ohm_pf": act.expand_branch(eqrow("ohm_pf")),
        "ohm_qf": act.expand_branch(eqrow("ohm_qf")),
        "ohm_pt": act.expand_branch(eqrow("ohm_pt")),
        "ohm_qt": act.expand_branch(eqrow("ohm_qt")),
        "sm_fr": act.expand_branch(-inrow("sm_fr")),
        "sm_to": act.expand_branch(-inrow("sm_to")),
        "va_diff": act.expand_branch(inrow("va_diff_lb") - inrow("va_diff_ub")),
    }
    for name, expand in (("pg", act.expand_gen), ("qg", act.expand_gen),
                         ("pf", act.expand_branch), ("qf", act.expand_branch),
                         ("pt", act.expand_branch), ("qt", act.expand_branch)):
        out[f"{name}_lb"] = expand(zl[problem.var_names[name]])
        out[f"{name}_ub"] = expand(-zu[problem.var_names[name]])
    out["vm_lb"] = zl[problem.var_names["vm"]].copy()
    out["vm_ub"] = -zu[problem.var_names["vm"]]
    return out
