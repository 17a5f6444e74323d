"""Primal-dual log-barrier method for smooth NLPs.

Solves ``min f(x) s.t. h(x) = 0, g(x) >= 0, lb <= x <= ub`` with slacked
inequalities, a monotone barrier schedule (mu -> mu/10 down to tol/10),
damped Newton steps on the perturbed KKT system with inertia correction,
a fraction-to-boundary rule, and an Armijo backtracking line search on an
l1-penalty barrier merit function.

Exits ``LOCALLY_OPTIMAL`` only when the unperturbed KKT residuals
(stationarity, feasibility, componentwise complementarity, dual signs)
are all below the requested tolerance.
"""

from __future__ import annotations

import time

import numpy as np
import scipy.sparse as sp

from ..problems import NlpProblem
from .linalg import DENSE_LIMIT, KktFactor
from .result import SolveResult, SolverOptions, Status

TAU_MIN = 0.99          # fraction-to-boundary factor
KAPPA_EPS = 10.0        # inner loop exits at E_mu <= KAPPA_EPS * mu
KAPPA_SIGMA = 1e10      # bound-dual safeguard corridor
ARMIJO_C1 = 1e-4
MAX_BACKTRACKS = 30
BOUND_RELAX = 1e-8      # widening applied to (nearly) fixed variable boxes


def solve_nlp(problem: NlpProblem, opts: SolverOptions | None = None,
              warm_start: np.ndarray | None = None,
              trace=None) -> SolveResult:
    opts = opts or SolverOptions(tol=1e-6, max_iter=300)
    t0 = time.perf_counter()
    tol = opts.tol

    n = problem.n
    lb = np.asarray(problem.var_lb, dtype=float).copy()
    ub = np.asarray(problem.var_ub, dtype=float).copy()
    tight = np.isfinite(lb) & np.isfinite(ub) & (ub - lb < 1e-9)
    lb[tight] -= BOUND_RELAX
    ub[tight] += BOUND_RELAX
    has_lb = np.isfinite(lb)
    has_ub = np.isfinite(ub)

    x = np.asarray(warm_start if warm_start is not None
                   else problem.initial_point(), dtype=float).copy()
    x = _push_inside(x, lb, ub, has_lb, has_ub)

    g0 = problem.ineq(x)
    q = g0.size
    p = problem.eq(x).size
    sg = np.maximum(g0, 1e-2)

    mu = 0.1
    mu_min = tol / 10.0
    lam = np.zeros(p)
    mug = mu / sg if q else np.zeros(0)
    zl = np.where(has_lb, mu / np.maximum(x - lb, 1e-8), 0.0)
    zu = np.where(has_ub, mu / np.maximum(ub - x, 1e-8), 0.0)

    rho = 1.0           # merit penalty weight
    delta_last = 0.0
    status = Status.ITERATION_LIMIT
    message = ""
    it = 0
    stalled = 0
    last_step: dict = {}

    while it < opts.max_iter:
        it += 1
        if opts.time_limit is not None and time.perf_counter() - t0 > opts.time_limit:
            message = "time limit reached"
            break

        f = problem.objective(x)
        grad = problem.grad(x)
        h = problem.eq(x)
        g = problem.ineq(x)
        jh = sp.csr_matrix(problem.jac_eq(x))
        jg = sp.csr_matrix(problem.jac_ineq(x))

        r_stat = grad - jh.T @ lam - zl + zu
        if q:
            r_stat = r_stat - jg.T @ mug
        err_stat = _inf(r_stat)
        err_feas = max(_inf(h), _inf(np.minimum(g, 0.0)) if q else 0.0,
                       _inf(np.minimum(x - lb, 0.0)[has_lb]),
                       _inf(np.minimum(ub - x, 0.0)[has_ub]))
        comp_terms = [np.abs((x - lb)[has_lb] * zl[has_lb]),
                      np.abs((ub - x)[has_ub] * zu[has_ub])]
        if q:
            comp_terms.append(np.abs(sg * mug))
        err_comp = max((float(t.max()) if t.size else 0.0) for t in comp_terms)

        if trace is not None:
            trace(it=it, mu=mu, err_stat=err_stat, err_feas=err_feas,
                  err_comp=err_comp, f=f, **last_step)
        if err_stat <= tol and err_feas <= tol and err_comp <= tol:
            status = Status.LOCALLY_OPTIMAL
            break

        # scaled inner criterion; large multipliers relax it (Ipopt-style)
        s_d = max(1.0, (np.abs(lam).sum() + np.abs(mug).sum()
                        + np.abs(zl).sum() + np.abs(zu).sum())
                  / max(1, p + q + n) / 100.0)
        comp_mu = [np.abs((x - lb)[has_lb] * zl[has_lb] - mu),
                   np.abs((ub - x)[has_ub] * zu[has_ub] - mu)]
        if q:
            comp_mu.append(np.abs(sg * mug - mu))
        err_mu = max(err_stat / s_d, err_feas,
                     max((float(t.max()) if t.size else 0.0) for t in comp_mu) / s_d)
        if err_mu <= KAPPA_EPS * mu and mu > mu_min:
            mu = max(mu / 10.0, mu_min)
            continue

        # Newton direction from the condensed symmetric system
        xl = np.maximum(np.where(has_lb, x - lb, 1.0), 1e-300)
        xu = np.maximum(np.where(has_ub, ub - x, 1.0), 1e-300)
        sigma_b = np.where(has_lb, zl / xl, 0.0) + np.where(has_ub, zu / xu, 0.0)
        hess = sp.csr_matrix(problem.lag_hess(x, lam, mug))

        rhs1 = -r_stat.copy()
        if q:
            sigma_g = mug / sg
            r_g = g - sg
            rhs1 -= jg.T @ (mug - mu / sg + sigma_g * r_g)
        rhs1 -= np.where(has_lb, zl - mu / xl, 0.0)
        rhs1 += np.where(has_ub, zu - mu / xu, 0.0)
        rhs = np.concatenate([rhs1, -h])

        h_scale = 1.0 + float(np.abs(hess.diagonal()).max(initial=0.0))
        w_base = hess + sp.diags(sigma_b)
        if q:
            w_base = w_base + jg.T @ sp.diags(sigma_g) @ jg
        sign_hint = np.concatenate([np.ones(n, dtype=np.int8),
                                    -np.ones(p, dtype=np.int8)])

        sol = None
        delta = 0.0
        for trial in range(14):
            w = w_base + sp.diags(np.full(n, delta)) if delta else w_base
            kkt = sp.bmat([[w, jh.T], [jh, None]], format="csc") \
                if p else sp.csc_matrix(w)
            sol = _inertia_solve(kkt, sign_hint, rhs, n, p)
            if sol is not None:
                break
            delta = max(1e-8 * h_scale, delta_last / 3.0) if delta == 0.0 \
                else delta * 10.0
            if delta > 1e12 * h_scale:
                break
        if sol is None:
            status = Status.NUMERICAL_FAILURE
            message = "inertia correction failed"
            break
        delta_last = delta

        dx = sol[:n]
        dlam = -sol[n:]
        if q:
            dsg = jg @ dx + (g - sg)
            dmug = -(sg * mug - mu + mug * dsg) / sg
        else:
            dsg = np.zeros(0)
            dmug = np.zeros(0)
        dzl = np.where(has_lb, -(xl * zl - mu + zl * dx) / xl, 0.0)
        dzu = np.where(has_ub, -(xu * zu - mu - zu * dx) / xu, 0.0)

        # fraction-to-boundary step caps
        tau_fb = max(TAU_MIN, 1.0 - mu)
        alpha_p = _fraction_to_boundary(sg, dsg, tau_fb) if q else 1.0
        alpha_p = min(alpha_p,
                      _fraction_to_boundary(xl[has_lb], dx[has_lb], tau_fb),
                      _fraction_to_boundary(xu[has_ub], -dx[has_ub], tau_fb))
        alpha_d = min(_fraction_to_boundary(mug, dmug, tau_fb) if q else 1.0,
                      _fraction_to_boundary(zl[has_lb], dzl[has_lb], tau_fb),
                      _fraction_to_boundary(zu[has_ub], dzu[has_ub], tau_fb))

        # backtracking on the l1 barrier merit; a step is also acceptable
        # when it reduces the constraint violation (guards against merit
        # rejections of good Newton steps near an active set)
        rho = max(rho, 1.2 * max(_inf(lam + dlam), _inf(mug + dmug), 1.0))

        def barrier(xv, sv):
            fv = problem.objective(xv)
            bar = 0.0
            if q:
                bar += float(np.log(sv).sum())
            bar += float(np.log((xv - lb)[has_lb]).sum())
            bar += float(np.log((ub - xv)[has_ub]).sum())
            return fv - mu * bar

        def theta(xv, sv):
            t = float(np.abs(problem.eq(xv)).sum())
            if q:
                t += float(np.abs(problem.ineq(xv) - sv).sum())
            return t

        theta0 = theta(x, sg)
        phib0 = barrier(x, sg)
        dbar = float(grad @ dx)
        if q:
            dbar -= mu * float((dsg / sg).sum())
        dbar -= mu * float((dx[has_lb] / xl[has_lb]).sum())
        dbar += mu * float((dx[has_ub] / xu[has_ub]).sum())
        d_phi = dbar - rho * theta0

        alpha = alpha_p
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            x_new = x + alpha * dx
            sg_new = sg + alpha * dsg
            ok = np.all((x_new - lb)[has_lb] > 0.0) \
                and np.all((ub - x_new)[has_ub] > 0.0) \
                and (not q or np.all(sg_new > 0.0))
            if ok:
                theta_new = theta(x_new, sg_new)
                phi = barrier(x_new, sg_new) + rho * theta_new
                armijo = phi <= phib0 + rho * theta0 \
                    + ARMIJO_C1 * alpha * min(d_phi, 0.0)
                feas_drop = theta_new <= (1.0 - 1e-4 * alpha) * theta0 + 1e-15
                if armijo or feas_drop:
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            # fall back to a cautious step; repeated failure ends the solve
            alpha = min(alpha_p, 1e-6)
            x_new = x + alpha * dx
            sg_new = sg + alpha * dsg

        last_step = {"alpha": alpha, "alpha_p": alpha_p, "alpha_d": alpha_d,
                     "delta": delta, "accepted": accepted, "rho": rho,
                     "lin_h": float(np.max(np.abs(jh @ dx + h))) if p else 0.0,
                     "theta0": theta0}
        stalled = stalled + 1 if alpha <= 1e-10 else 0
        if stalled >= 8:
            status = Status.NUMERICAL_FAILURE
            message = "search direction stalled"
            break
        x, sg = x_new, sg_new
        # keep strictly interior at machine precision
        eps_int = 1e-13
        lo = lb[has_lb]
        x[has_lb] = np.maximum(x[has_lb], lo + eps_int * (1.0 + np.abs(lo)))
        hi = ub[has_ub]
        x[has_ub] = np.minimum(x[has_ub], hi - eps_int * (1.0 + np.abs(hi)))
        if q:
            sg = np.maximum(sg, 1e-300)
        lam = lam + alpha * dlam
        if q:
            mug = np.maximum(mug + alpha_d * dmug, 1e-16)
        zl = np.where(has_lb, np.maximum(zl + alpha_d * dzl, 1e-16), 0.0)
        zu = np.where(has_ub, np.maximum(zu + alpha_d * dzu, 1e-16), 0.0)

        # keep bound duals inside the kappa-sigma corridor around mu/slack
        if has_lb.any():
            xl = np.maximum(np.where(has_lb, x - lb, 1.0), 1e-300)
            zl = np.where(has_lb,
                          np.clip(zl, mu / (KAPPA_SIGMA * xl),
                                  KAPPA_SIGMA * mu / xl), 0.0)
        if has_ub.any():
            xu = np.maximum(np.where(has_ub, ub - x, 1.0), 1e-300)
            zu = np.where(has_ub,
                          np.clip(zu, mu / (KAPPA_SIGMA * xu),
                                  KAPPA_SIGMA * mu / xu), 0.0)
        if q:
            mug = np.clip(mug, mu / (KAPPA_SIGMA * sg), KAPPA_SIGMA * mu / sg)

    result = SolveResult(status=status, message=message, iterations=it,
                         solve_time=time.perf_counter() - t0)
    result.x = x
    result.lam_eq = lam
    result.lam_ineq = mug
    result.z_lb = zl
    result.z_ub = zu
    if status == Status.LOCALLY_OPTIMAL:
        f = problem.objective(x)
        result.primal_objective = f
        lag = f - float(lam @ problem.eq(x))
        if q:
            lag -= float(mug @ problem.ineq(x))
        lag -= float((zl[has_lb] * (x - lb)[has_lb]).sum())
        lag -= float((zu[has_ub] * (ub - x)[has_ub]).sum())
        result.dual_objective = lag
    return result


def _inertia_solve(kkt, sign_hint, rhs, n: int, p: int) -> np.ndarray | None:
    """Factor and solve the augmented system, requiring inertia (n, p, 0).

    Escalates to a dense factorization when the sparse one cannot deliver an
    accurate solution; returns None when the inertia is wrong (the caller
    then bumps the curvature shift).
    """
    tol_rel = 1e-9 * (1.0 + float(np.max(np.abs(rhs))))
    last = None
    for limit in (DENSE_LIMIT, 1 << 30):
        try:
            fac = KktFactor(kkt, sign_hint=sign_hint, static_reg=1e-11,
                            dense_limit=limit)
        except Exception:
            continue
        if not fac.dense and fac.boosted:
            continue  # unpivoted factorization bailed out; ask the dense one
        npos, nneg, nzero = fac.inertia
        if not (npos == n and nneg == p and nzero == 0):
            if fac.dense:
                return None
            continue
        try:
            sol = fac.solve(rhs, refine=2)
        except Exception:
            continue
        if not np.all(np.isfinite(sol)):
            continue
        resid = float(np.max(np.abs(rhs - kkt @ sol)))
        for _ in range(8):
            if resid <= tol_rel:
                return sol
            sol = sol + fac.solve(rhs - kkt @ sol, refine=0)
            new_resid = float(np.max(np.abs(rhs - kkt @ sol)))
            if not np.isfinite(new_resid) or new_resid >= 0.5 * resid:
                break
            resid = new_resid
        if resid <= tol_rel:
            return sol
        last = sol
    return last


def _push_inside(x, lb, ub, has_lb, has_ub):
    width = np.where(has_lb & has_ub, ub - lb, np.inf)
    margin = np.minimum(1e-2, 0.25 * width)
    x = np.where(has_lb, np.maximum(x, lb + margin), x)
    x = np.where(has_ub, np.minimum(x, ub - margin), x)
    return x


def _fraction_to_boundary(v: np.ndarray, dv: np.ndarray, tau: float) -> float:
    if v.size == 0:
        return 1.0
    neg = dv < 0.0
    if not neg.any():
        return 1.0
    return min(1.0, float(np.min(-tau * v[neg] / dv[neg])))


def _inf(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if v.size else 0.0
