"""Homogeneous self-dual interior-point method for LP and second-order
cone programs, with Nesterov-Todd scalings and Mehrotra predictor-corrector.

Solves ``min c'x  s.t.  A x - b in K`` (see :mod:`opfkit.problems`);
internally the zero-cone rows become equalities ``A_eq x = b_eq`` and the
remaining rows become ``G x + s = h`` with ``s`` in the cone product C.
Rotated cones are mapped to plain second-order cones by an orthogonal
reflection of their first two rows.  The embedding delivers either an
optimal primal/dual pair or a certificate of primal/dual infeasibility
(``tau -> 0``), reported as ``INFEASIBLE_OR_UNBOUNDED``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..problems import NONNEG, SOC, ZERO, ConicProblem
from .linalg import KktFactor
from .result import SolveResult, SolverOptions, Status

STEP = 0.99
BIG = 1e308


# ---------------------------------------------------------------------------
# cone product machinery (nonnegative rows first, then SOC blocks)


class ConeSpace:
    def __init__(self, l: int, soc_dims: list[int]):
        self.l = l
        self.soc_dims = soc_dims
        offs = [l]
        for d in soc_dims:
            offs.append(offs[-1] + d)
        self.soc_offsets = offs[:-1]
        self.m = offs[-1]
        self.deg = l + len(soc_dims)

    def identity(self) -> np.ndarray:
        e = np.zeros(self.m)
        e[:self.l] = 1.0
        for o in self.soc_offsets:
            e[o] = 1.0
        return e

    def margin(self, u: np.ndarray) -> float:
        """Distance to the cone boundary; negative means outside."""
        vals = []
        if self.l:
            vals.append(u[:self.l].min())
        for o, d in zip(self.soc_offsets, self.soc_dims):
            vals.append(u[o] - np.linalg.norm(u[o + 1:o + d]))
        return min(vals) if vals else np.inf

    def shift_into(self, u: np.ndarray) -> np.ndarray:
        alpha = -self.margin(u)
        if alpha < 0.0:
            return u
        return u + (1.0 + alpha) * self.identity()

    def jprod(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        out = np.empty(self.m)
        out[:self.l] = u[:self.l] * v[:self.l]
        for o, d in zip(self.soc_offsets, self.soc_dims):
            u0, u1 = u[o], u[o + 1:o + d]
            v0, v1 = v[o], v[o + 1:o + d]
            out[o] = u0 * v0 + u1 @ v1
            out[o + 1:o + d] = u0 * v1 + v0 * u1
        return out

    def jdiv(self, lam: np.ndarray, d: np.ndarray) -> np.ndarray:
        """Solve lam o x = d."""
        out = np.empty(self.m)
        out[:self.l] = d[:self.l] / lam[:self.l]
        for o, dim in zip(self.soc_offsets, self.soc_dims):
            l0, l1 = lam[o], lam[o + 1:o + dim]
            d0, d1 = d[o], d[o + 1:o + dim]
            rho = l0 * l0 - l1 @ l1
            x0 = (l0 * d0 - l1 @ d1) / rho
            out[o] = x0
            out[o + 1:o + dim] = (d1 - x0 * l1) / l0
        return out

    def max_step(self, u: np.ndarray, du: np.ndarray) -> float:
        """Largest t with u + s*du in the cone for all s in [0, t]."""
        t = BIG
        if self.l:
            neg = du[:self.l] < 0.0
            if neg.any():
                t = min(t, float(np.min(-u[:self.l][neg] / du[:self.l][neg])))
        for o, d in zip(self.soc_offsets, self.soc_dims):
            t = min(t, _soc_max_step(u[o:o + d], du[o:o + d]))
        return t

    def nt_scaling(self, s: np.ndarray, z: np.ndarray) -> "NtScaling":
        return NtScaling(self, s, z)


def _soc_max_step(u: np.ndarray, du: np.ndarray) -> float:
    u0, u1 = u[0], u[1:]
    d0, d1 = du[0], du[1:]
    c0 = u0 * u0 - u1 @ u1
    b = u0 * d0 - u1 @ d1
    a = d0 * d0 - d1 @ d1
    if c0 <= 0.0:
        # boundary or outside; only permit directions that immediately improve
        return BIG if (a >= 0.0 and b >= 0.0 and d0 >= 0.0) else 0.0
    if a == 0.0:
        if b >= 0.0:
            return BIG
        return c0 / (-2.0 * b)
    disc = b * b - a * c0
    if a > 0.0:
        if disc < 0.0 or b >= 0.0:
            return BIG  # f(s) > 0 for all s >= 0
        return (-b - np.sqrt(disc)) / a
    # a < 0: concave; single positive root
    return (-b - np.sqrt(disc)) / a if disc >= 0.0 else 0.0


class NtScaling:
    """Nesterov-Todd scaling W with W z = W^{-T} s =: lam."""

    def __init__(self, space: ConeSpace, s: np.ndarray, z: np.ndarray):
        self.space = space
        l = space.l
        self.w_l = np.sqrt(s[:l] / z[:l]) if l else np.zeros(0)
        self.soc: list[tuple[float, np.ndarray]] = []
        for o, d in zip(space.soc_offsets, space.soc_dims):
            sb, zb = s[o:o + d], z[o:o + d]
            sres = sb[0] * sb[0] - sb[1:] @ sb[1:]
            zres = zb[0] * zb[0] - zb[1:] @ zb[1:]
            if sres <= 0.0 or zres <= 0.0:
                raise FloatingPointError("iterate left the cone interior")
            sbar = sb / np.sqrt(sres)
            zbar = zb / np.sqrt(zres)
            gamma = np.sqrt((1.0 + sbar @ zbar) / 2.0)
            wbar = (sbar + np.concatenate(([zbar[0]], -zbar[1:]))) / (2.0 * gamma)
            eta = (sres / zres) ** 0.25
            self.soc.append((eta, wbar))
        self.lam = self.apply(z)

    def _soc_mat(self, eta: float, wbar: np.ndarray, inverse: bool) -> np.ndarray:
        d = wbar.size
        w0, w1 = wbar[0], wbar[1:].copy()
        if inverse:
            w1 = -w1
        mat = np.empty((d, d))
        mat[0, 0] = w0
        mat[0, 1:] = w1
        mat[1:, 0] = w1
        mat[1:, 1:] = np.eye(d - 1) + np.outer(w1, w1) / (1.0 + w0)
        return mat * (eta if not inverse else 1.0 / eta)

    def _apply_soc(self, v: np.ndarray, inverse: bool) -> np.ndarray:
        out = v.copy()
        for (eta, wbar), o, d in zip(self.soc, self.space.soc_offsets,
                                     self.space.soc_dims):
            w0, w1 = wbar[0], wbar[1:]
            sgn = -1.0 if inverse else 1.0
            scale = 1.0 / eta if inverse else eta
            v0, v1 = v[o], v[o + 1:o + d]
            t = sgn * (w1 @ v1)
            out[o] = scale * (w0 * v0 + t)
            out[o + 1:o + d] = scale * (v1 + sgn * (v0 + t / (1.0 + w0)) * w1)
        return out

    def apply(self, v: np.ndarray) -> np.ndarray:
        out = v.copy()
        out[:self.space.l] *= self.w_l
        return self._apply_soc(out, inverse=False) if self.soc else out

    def apply_inv(self, v: np.ndarray) -> np.ndarray:
        out = self._apply_soc(v, inverse=True) if self.soc else v.copy()
        out[:self.space.l] /= self.w_l
        return out

    def winv_sparse(self) -> sp.csc_matrix:
        """W^{-1} as a sparse block-diagonal matrix (W is symmetric)."""
        space = self.space
        rows, cols, data = [], [], []
        idx = np.arange(space.l)
        rows.append(idx)
        cols.append(idx)
        data.append(1.0 / self.w_l)
        for (eta, wbar), o, d in zip(self.soc, space.soc_offsets, space.soc_dims):
            blk = self._soc_mat(eta, wbar, inverse=True)
            rr, cc = np.meshgrid(np.arange(o, o + d), np.arange(o, o + d),
                                 indexing="ij")
            rows.append(rr.ravel())
            cols.append(cc.ravel())
            data.append(blk.ravel())
        return sp.csc_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(space.m, space.m))


# ---------------------------------------------------------------------------
# problem preparation


@dataclass
class _Internal:
    c: np.ndarray
    a_eq: sp.csr_matrix
    b_eq: np.ndarray
    g: sp.csr_matrix
    h: np.ndarray
    space: ConeSpace
    eq_rows: np.ndarray      # original indices of zero-cone rows
    ineq_rows: np.ndarray    # original indices of the G rows (permuted order)
    rot_offsets: list[int]   # offsets within G of blocks rotated from RSOC
    rot_dims: list[int]
    cost_scale: float
    # single-entry +-1 rows of G per column (variable bound rows), used to
    # absorb residual dual infeasibility without leaving the dual cone
    bound_row_pos: np.ndarray
    bound_row_neg: np.ndarray


_ROT = np.sqrt(0.5)


def _prepare(problem: ConicProblem) -> _Internal:
    problem.validate()
    a = sp.csr_matrix(problem.a)
    b = np.asarray(problem.b, dtype=float)

    eq_rows, nonneg_rows = [], []
    soc_blocks = []  # (row indices, rotated?)
    offset = 0
    for cone in problem.cones:
        idx = np.arange(offset, offset + cone.dim)
        if cone.kind == ZERO:
            eq_rows.append(idx)
        elif cone.kind == NONNEG:
            nonneg_rows.append(idx)
        elif cone.kind == SOC:
            soc_blocks.append((idx, False))
        else:
            soc_blocks.append((idx, True))
        offset += cone.dim

    eq_idx = np.concatenate(eq_rows) if eq_rows else np.zeros(0, dtype=int)
    nn_idx = np.concatenate(nonneg_rows) if nonneg_rows else np.zeros(0, dtype=int)
    soc_idx = [idx for idx, _ in soc_blocks]
    ineq_idx = np.concatenate([nn_idx] + soc_idx) if (len(nn_idx) or soc_idx) \
        else np.zeros(0, dtype=int)

    a_eq = a[eq_idx]
    b_eq = b[eq_idx]
    a_in = sp.csr_matrix(a[ineq_idx])
    b_in = b[ineq_idx].copy()

    # reflect rotated-cone rows into plain SOC rows:
    # (r0, r1) -> ((r0 + r1)/sqrt2, (r0 - r1)/sqrt2)
    rot_offsets, rot_dims = [], []
    off = nn_idx.size
    dims = []
    for idx, rotated in soc_blocks:
        dims.append(idx.size)
        if rotated:
            rot_offsets.append(off)
            rot_dims.append(idx.size)
        off += idx.size
    if rot_offsets:
        r = sp.eye(ineq_idx.size, format="lil")
        for o in rot_offsets:
            r[o, o] = _ROT
            r[o, o + 1] = _ROT
            r[o + 1, o] = _ROT
            r[o + 1, o + 1] = -_ROT
        r = sp.csr_matrix(r)
        a_in = sp.csr_matrix(r @ a_in)
        b_in = r @ b_in

    space = ConeSpace(int(nn_idx.size), dims)
    cost_scale = max(1.0, float(np.max(np.abs(problem.c)))) if problem.c.size else 1.0
    g_mat = sp.csr_matrix(-a_in)

    n = problem.n_var
    row_pos = np.full(n, -1, dtype=np.int64)
    row_neg = np.full(n, -1, dtype=np.int64)
    gl = g_mat[:space.l].tocsr() if space.l else None
    if gl is not None:
        nnz_per_row = np.diff(gl.indptr)
        for i in np.flatnonzero(nnz_per_row == 1):
            j = gl.indices[gl.indptr[i]]
            v = gl.data[gl.indptr[i]]
            if v == 1.0:
                row_pos[j] = i
            elif v == -1.0:
                row_neg[j] = i

    return _Internal(
        c=np.asarray(problem.c, dtype=float) / cost_scale,
        a_eq=sp.csr_matrix(a_eq), b_eq=b_eq,
        g=g_mat, h=-b_in,
        space=space, eq_rows=eq_idx, ineq_rows=ineq_idx,
        rot_offsets=rot_offsets, rot_dims=rot_dims,
        cost_scale=cost_scale,
        bound_row_pos=row_pos, bound_row_neg=row_neg)


# ---------------------------------------------------------------------------
# the interior-point iteration


class _Kkt:
    """Scaled KKT solver for [0 A' G'; A 0 0; G 0 -W'W].

    Works with the scaled inequality direction ``uzt = W uz`` so the third
    block row reads ``W^{-T}G ux - uzt = W^{-T} bz`` and is satisfied exactly
    by construction; static quasidefinite regularization is removed by
    iterative refinement of the reduced system.
    """

    def __init__(self, internal: _Internal, winv: sp.csc_matrix):
        g, a_eq = internal.g, internal.a_eq
        n = g.shape[1]
        p = a_eq.shape[0]
        self.a_eq = a_eq
        self.gt = sp.csr_matrix(winv @ g)   # W^{-T} G (W symmetric)
        self.winv = winv
        m_red = sp.csr_matrix(self.gt.T @ self.gt)
        k0 = sp.bmat([[m_red, a_eq.T], [a_eq, None]], format="csc") \
            if p else sp.csc_matrix(m_red)
        self.sign_hint = np.concatenate([np.ones(n, dtype=np.int8),
                                         -np.ones(p, dtype=np.int8)])
        self.k0 = k0
        self.n, self.p = n, p
        self.level = 0
        self.factor = self._make_factor(0)

    def _make_factor(self, level: int):
        # robustness ladder: plain, regularized, then a dense factorization
        if level == 0:
            return KktFactor(self.k0, sign_hint=self.sign_hint,
                             piv_tol=1e-13, piv_boost=1e-6)
        if level == 1:
            return KktFactor(self.k0, sign_hint=self.sign_hint,
                             static_reg=1e-8, piv_tol=1e-13, piv_boost=1e-6)
        return KktFactor(self.k0, sign_hint=self.sign_hint,
                         dense_limit=1 << 30)

    def _reduced_solve(self, rhs: np.ndarray) -> np.ndarray:
        scale = 1.0 + float(np.max(np.abs(rhs)))
        while True:
            sol = self.factor.solve(rhs, target=self.k0, refine=2)
            if np.all(np.isfinite(sol)):
                resid = float(np.max(np.abs(rhs - self.k0 @ sol)))
                if resid <= 1e-7 * scale or self.level >= 2:
                    return sol
            elif self.level >= 2:
                raise FloatingPointError("reduced KKT solve failed")
            self.level += 1
            self.factor = self._make_factor(self.level)

    def solve3(self, bx: np.ndarray, by: np.ndarray, bz: np.ndarray,
               refine: int = 1) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Returns (ux, uy, uzt) with uzt = W uz."""
        bzt = self.winv @ bz
        rhs = np.concatenate([bx + self.gt.T @ bzt, by])
        sol = self._reduced_solve(rhs)
        ux, uy = sol[:self.n], sol[self.n:]
        for _ in range(refine):
            uzt = self.gt @ ux - bzt
            r1 = bx - (self.a_eq.T @ uy + self.gt.T @ uzt)
            r2 = by - self.a_eq @ ux
            d = self._reduced_solve(np.concatenate([r1, r2]))
            ux = ux + d[:self.n]
            uy = uy + d[self.n:]
        uzt = self.gt @ ux - bzt
        return ux, uy, uzt


def _solve_hsd(internal: _Internal, opts: SolverOptions) -> dict:
    c, a_eq, b_eq = internal.c, internal.a_eq, internal.b_eq
    g, h, space = internal.g, internal.h, internal.space
    n, p, m = c.size, b_eq.size, space.m
    t0 = time.perf_counter()

    norm_b = max(1.0, np.linalg.norm(b_eq))
    norm_h = max(1.0, np.linalg.norm(h))
    norm_c = max(1.0, np.linalg.norm(c))

    # initial point from two least-squares KKT solves with W = I
    eye = sp.identity(m, format="csc")
    kkt = _Kkt(internal, eye)
    x, y, uz = kkt.solve3(np.zeros(n), b_eq, h)
    s = space.shift_into(-uz)
    _, y, z0 = kkt.solve3(-c, np.zeros(p), np.zeros(m))
    z = space.shift_into(z0)
    tau, kappa = 1.0, 1.0
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(s)) \
            or not np.all(np.isfinite(z)):
        return {"status": Status.NUMERICAL_FAILURE,
                "message": "initial KKT solve failed", "iterations": 0,
                "solution": None, "tau": tau, "kappa": kappa,
                "solve_time": time.perf_counter() - t0}

    best = None
    status = Status.ITERATION_LIMIT
    message = ""
    iters = 0
    for it in range(opts.max_iter):
        iters = it
        if opts.time_limit is not None and time.perf_counter() - t0 > opts.time_limit:
            message = "time limit reached"
            status = Status.ITERATION_LIMIT
            break

        res_x = a_eq.T @ y + g.T @ z + c * tau
        res_y = a_eq @ x - b_eq * tau
        res_z = g @ x + s - h * tau
        res_t = float(c @ x + b_eq @ y + h @ z + kappa)
        gap = float(s @ z)
        mu = (gap + tau * kappa) / (space.deg + 1)

        pcost = float(c @ x) / tau
        dcost = float(-(b_eq @ y) - h @ z) / tau
        gap_n = gap / (tau * tau)
        relgap = gap_n / max(1.0, abs(pcost))
        pres = max(np.linalg.norm(res_y) / norm_b,
                   np.linalg.norm(res_z) / norm_h) / tau
        dres = np.linalg.norm(res_x) / norm_c / tau

        raw_p = max(
            float(np.max(np.abs(res_y))) if p else 0.0,
            float(np.max(np.abs(res_z))) if m else 0.0) / tau
        raw_d = internal.cost_scale * float(np.max(np.abs(res_x))) / tau
        gap_orig = internal.cost_scale * gap_n
        pobj_orig = internal.cost_scale * pcost

        others_ok = (pres <= opts.tol and dres <= opts.tol
                     and relgap <= opts.tol and raw_p <= opts.tol
                     and gap_orig <= opts.tol * (1.0 + abs(pobj_orig)))
        if others_ok and raw_d > 8.0 * opts.tol and raw_d <= 1e5 * opts.tol:
            z_try = _polish_duals(internal, res_x, tau, z)
            if z_try is not None:
                res_x_try = a_eq.T @ y + g.T @ z_try + c * tau
                raw_d_try = internal.cost_scale \
                    * float(np.max(np.abs(res_x_try))) / tau
                gap_try = internal.cost_scale * float(s @ z_try) / (tau * tau)
                if raw_d_try <= 8.0 * opts.tol \
                        and gap_try <= opts.tol * (1.0 + abs(pobj_orig)):
                    z = z_try
                    res_x, raw_d, gap_orig = res_x_try, raw_d_try, gap_try
        solved = others_ok and raw_d <= 8.0 * opts.tol
        if solved:
            status = Status.OPTIMAL
            best = (x / tau, y / tau, z / tau, s / tau)
            break

        # infeasibility certificates from the homogeneous model
        cert = -(h @ z + b_eq @ y)
        if cert > 0.0:
            pinfres = np.linalg.norm(a_eq.T @ y + g.T @ z) / cert / norm_c
            if pinfres <= opts.tol and tau <= 1e-6 * max(1.0, kappa):
                status = Status.INFEASIBLE_OR_UNBOUNDED
                message = "primal infeasibility certificate found"
                best = (None, y / cert, z / cert, None)
                break
        if float(c @ x) < 0.0:
            unb = -float(c @ x)
            dinfres = max(np.linalg.norm(a_eq @ x) / norm_b,
                          np.linalg.norm(g @ x + s) / norm_h) / unb
            if dinfres <= opts.tol and tau <= 1e-6 * max(1.0, kappa):
                status = Status.INFEASIBLE_OR_UNBOUNDED
                message = "dual infeasibility certificate found (primal unbounded)"
                best = (x / unb, None, None, s / unb)
                break

        try:
            scaling = space.nt_scaling(s, z)
            kkt = _Kkt(internal, scaling.winv_sparse())
            h_tilde = kkt.winv @ h
            u1 = kkt.solve3(-c, b_eq, h)
            denom = (float(c @ u1[0] + b_eq @ u1[1] + h_tilde @ u1[2])
                     - kappa / tau)

            def direction(eta: float, sigma: float, corr=None):
                ds_t = -space.jprod(scaling.lam, scaling.lam)
                dk_t = -tau * kappa
                if corr is not None:
                    ds_t = ds_t - space.jprod(corr[0], corr[1]) \
                        + sigma * mu * space.identity()
                    dk_t = dk_t - corr[2] * corr[3] + sigma * mu
                q = space.jdiv(scaling.lam, ds_t)
                bx = -(1.0 - eta) * res_x
                by = -(1.0 - eta) * res_y
                bz = -(1.0 - eta) * res_z - scaling.apply(q)
                bt = -(1.0 - eta) * res_t
                u2 = kkt.solve3(bx, by, bz)
                num = bt - dk_t / tau \
                    - float(c @ u2[0] + b_eq @ u2[1] + h_tilde @ u2[2])
                dtau = num / denom
                dx = u2[0] + dtau * u1[0]
                dy = u2[1] + dtau * u1[1]
                dzt = u2[2] + dtau * u1[2]          # scaled: W dz
                dz = scaling.apply_inv(dzt)
                # ds from the third Newton equation directly; this keeps the
                # primal residual contraction exact even when W is ill
                # conditioned near convergence
                ds = -(1.0 - eta) * res_z - (g @ dx - h * dtau)
                dkappa = (dk_t - kappa * dtau) / tau
                return dx, dy, dz, ds, dtau, dkappa

            dxa, dya, dza, dsa, dta, dka = direction(0.0, 0.0)
            alpha_aff = min(1.0, _max_step_all(space, s, dsa, z, dza,
                                               tau, dta, kappa, dka))
            sigma = (1.0 - alpha_aff) ** 3
            corr = (scaling.apply_inv(dsa), scaling.apply(dza), dta, dka)
            dx, dy, dz, ds, dtau, dkappa = direction(sigma, sigma, corr)
            alpha = STEP * _max_step_all(space, s, ds, z, dz, tau, dtau,
                                         kappa, dkappa)
            alpha = min(1.0, alpha)
        except FloatingPointError as exc:
            status = Status.NUMERICAL_FAILURE
            message = f"numerical failure: {exc}"
            break

        if alpha <= 1e-14 or not np.isfinite(alpha):
            status = Status.NUMERICAL_FAILURE
            message = "step length collapsed"
            break

        x = x + alpha * dx
        y = y + alpha * dy
        z = z + alpha * dz
        s = s + alpha * ds
        tau += alpha * dtau
        kappa += alpha * dkappa
        if tau <= 0.0 or kappa < 0.0 or not np.isfinite(tau):
            status = Status.NUMERICAL_FAILURE
            message = "tau left the positive ray"
            break

    return {
        "status": status, "message": message, "iterations": iters,
        "solution": best, "tau": tau, "kappa": kappa,
        "solve_time": time.perf_counter() - t0,
    }


def _polish_duals(internal: _Internal, res_x: np.ndarray, tau: float,
                  z: np.ndarray) -> np.ndarray | None:
    """Zero the dual equality residual by raising variable-bound duals.

    A positive column residual is absorbed by the row where the variable
    enters with +1, a negative one by the -1 row, so the added mass is
    always nonnegative and z stays in the cone.  Columns lacking the needed
    bound row leave the attempt unusable (returns None).
    """
    r = -res_x
    dz = np.zeros(internal.space.m)
    pos_need = r > 0.0
    neg_need = r < 0.0
    if pos_need.any():
        rows = internal.bound_row_pos[pos_need]
        if np.any(rows < 0):
            return None
        np.add.at(dz, rows, r[pos_need])
    if neg_need.any():
        rows = internal.bound_row_neg[neg_need]
        if np.any(rows < 0):
            return None
        np.add.at(dz, rows, -r[neg_need])
    return z + dz


def _max_step_all(space, s, ds, z, dz, tau, dtau, kappa, dkappa) -> float:
    t = min(space.max_step(s, ds), space.max_step(z, dz))
    if dtau < 0.0:
        t = min(t, -tau / dtau)
    if dkappa < 0.0:
        t = min(t, -kappa / dkappa)
    return t


# ---------------------------------------------------------------------------
# public entry points


def solve_conic(problem: ConicProblem,
                opts: SolverOptions | None = None) -> SolveResult:
    """Solve a conic problem; duals are returned per original row in K*."""
    opts = opts or SolverOptions(tol=1e-7)
    internal = _prepare(problem)
    out = _solve_hsd(internal, opts)

    result = SolveResult(status=out["status"], message=out["message"],
                         iterations=out["iterations"],
                         solve_time=out["solve_time"])
    if out["solution"] is None:
        return result
    x, y_eq, z, s = out["solution"]
    scale = internal.cost_scale
    m_total = problem.n_row

    if out["status"] == Status.OPTIMAL:
        y_all = np.zeros(m_total)
        s_all = np.zeros(m_total)
        z_u, s_u = _unrotate(internal, z), _unrotate(internal, s)
        if internal.eq_rows.size:
            y_all[internal.eq_rows] = -y_eq * scale
        y_all[internal.ineq_rows] = z_u * scale
        s_all[internal.ineq_rows] = s_u
        result.x = x
        result.y = y_all
        result.s = s_all
        result.primal_objective = float(problem.c @ x)
        result.dual_objective = float(problem.b @ y_all)
    elif out["status"] == Status.INFEASIBLE_OR_UNBOUNDED:
        if y_eq is not None and z is not None:
            y_all = np.zeros(m_total)
            if internal.eq_rows.size:
                y_all[internal.eq_rows] = -y_eq * scale
            y_all[internal.ineq_rows] = _unrotate(internal, z) * scale
            result.y = y_all
        if x is not None:
            result.x = x
    return result


def _unrotate(internal: _Internal, v: np.ndarray) -> np.ndarray:
    if not internal.rot_offsets:
        return v
    out = v.copy()
    for o in internal.rot_offsets:
        v0, v1 = v[o], v[o + 1]
        out[o] = _ROT * (v0 + v1)
        out[o + 1] = _ROT * (v0 - v1)
    return out


def solve_lp(problem: ConicProblem,
             opts: SolverOptions | None = None) -> SolveResult:
    """Predictor-corrector primal-dual IPM for pure LPs.

    Same homogeneous embedding as :func:`solve_conic`; with only linear rows
    the Nesterov-Todd scaling reduces to the classic primal-dual diagonal.
    """
    for cone in problem.cones:
        if cone.kind not in (ZERO, NONNEG):
            raise ValueError("solve_lp accepts only zero/nonneg cones; "
                             "use solve_conic for second-order cones")
    return solve_conic(problem, opts or SolverOptions(tol=1e-8))
