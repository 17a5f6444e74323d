"""Shared symmetric indefinite linear algebra for the interior-point kernels.

One entry point, :func:`factor`, hides two backends behind the same
interface: LAPACK Bunch-Kaufman LDL^T for systems below ``DENSE_LIMIT``
rows, and an up-looking sparse LDL^T (elimination-tree based, no pivoting,
dynamic diagonal regularization) above it.  Both report inertia, which the
NLP kernel uses for curvature correction.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import reverse_cuthill_mckee

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


DENSE_LIMIT = 500


class FactorizationError(RuntimeError):
    pass


@njit(cache=True)
def _ldl_symbolic(n, ap, ai, parent, lnz, flag):
    for k in range(n):
        parent[k] = -1
        flag[k] = k
        lnz[k] = 0
        for p in range(ap[k], ap[k + 1]):
            i = ai[p]
            while i < k and flag[i] != k:
                if parent[i] == -1:
                    parent[i] = k
                lnz[i] += 1
                flag[i] = k
                i = parent[i]


@njit(cache=True)
def _ldl_numeric(n, ap, ai, ax, lp, parent, li, lx, d, y, pattern, flag,
                 lnz_count, sign_hint, piv_tol, piv_boost):
    boosted = 0
    for k in range(n):
        y[k] = 0.0
        top = n
        flag[k] = k
        lnz_count[k] = 0
        for p in range(ap[k], ap[k + 1]):
            i = ai[p]
            y[i] += ax[p]
            plen = 0
            while flag[i] != k:
                pattern[plen] = i
                plen += 1
                flag[i] = k
                i = parent[i]
            while plen > 0:
                plen -= 1
                top -= 1
                pattern[top] = pattern[plen]
        d[k] = y[k]
        y[k] = 0.0
        for t in range(top, n):
            i = pattern[t]
            yi = y[i]
            y[i] = 0.0
            p_end = lp[i] + lnz_count[i]
            for p in range(lp[i], p_end):
                y[li[p]] -= lx[p] * yi
            l_ki = yi / d[i]
            d[k] -= l_ki * yi
            li[p_end] = k
            lx[p_end] = l_ki
            lnz_count[i] += 1
        if d[k] != d[k]:  # NaN pivot from overflow upstream
            d[k] = piv_boost if sign_hint[k] >= 0 else -piv_boost
            boosted += 1
        elif sign_hint[k] >= 0:
            if d[k] <= piv_tol:
                d[k] = piv_boost
                boosted += 1
        else:
            if d[k] >= -piv_tol:
                d[k] = -piv_boost
                boosted += 1
    return boosted


@njit(cache=True)
def _ldl_solve(n, lp, li, lx, lnz_count, d, b):
    for i in range(n):
        xi = b[i]
        if xi != 0.0:
            for p in range(lp[i], lp[i] + lnz_count[i]):
                b[li[p]] -= lx[p] * xi
    for i in range(n):
        b[i] /= d[i]
    for i in range(n - 1, -1, -1):
        xi = b[i]
        for p in range(lp[i], lp[i] + lnz_count[i]):
            xi -= lx[p] * b[li[p]]
        b[i] = xi


class _SparseLdl:
    def __init__(self, kkt: sp.csc_matrix, sign_hint: np.ndarray,
                 piv_tol: float, piv_boost: float,
                 perm: np.ndarray | None = None):
        n = kkt.shape[0]
        self.n = n
        if perm is None:
            perm = np.asarray(reverse_cuthill_mckee(kkt.tocsr(), symmetric_mode=True))
        self.perm = perm
        k = kkt[perm[:, None], perm[None, :]].tocsc()
        upper = sp.triu(k, format="csc")
        upper.sort_indices()
        ap = upper.indptr.astype(np.int64)
        ai = upper.indices.astype(np.int64)
        ax = upper.data.astype(np.float64)

        parent = np.empty(n, dtype=np.int64)
        lnz = np.empty(n, dtype=np.int64)
        flag = np.empty(n, dtype=np.int64)
        _ldl_symbolic(n, ap, ai, parent, lnz, flag)
        lp = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(lnz, out=lp[1:])
        li = np.empty(int(lp[-1]), dtype=np.int64)
        lx = np.empty(int(lp[-1]), dtype=np.float64)
        d = np.empty(n, dtype=np.float64)
        y = np.zeros(n, dtype=np.float64)
        pattern = np.empty(n, dtype=np.int64)
        self.lnz_count = np.zeros(n, dtype=np.int64)
        hint = sign_hint[perm].astype(np.int8)
        self.boosted = int(_ldl_numeric(
            n, ap, ai, ax, lp, parent, li, lx, d, y, pattern, flag,
            self.lnz_count, hint, piv_tol, piv_boost))
        self.lp, self.li, self.lx, self.d = lp, li, lx, d
        npos = int((d > 0).sum())
        self.inertia = (npos, n - npos, 0)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        b = rhs[self.perm].astype(np.float64, copy=True)
        _ldl_solve(self.n, self.lp, self.li, self.lx, self.lnz_count, self.d, b)
        out = np.empty_like(b)
        out[self.perm] = b
        return out


class _DenseLdl:
    def __init__(self, kkt: np.ndarray):
        lu, d, perm = scipy.linalg.ldl(kkt, lower=True)
        self.l = lu[perm, :]
        self.d = d
        self.perm = perm
        npos = nneg = nzero = 0
        n = kkt.shape[0]
        i = 0
        tol = max(np.abs(d).max(), 1.0) * 1e-300
        while i < n:
            if i + 1 < n and d[i + 1, i] != 0.0:
                # 2x2 pivot block has one eigenvalue of each sign
                npos += 1
                nneg += 1
                i += 2
            else:
                if d[i, i] > tol:
                    npos += 1
                elif d[i, i] < -tol:
                    nneg += 1
                else:
                    nzero += 1
                i += 1
        self.inertia = (npos, nneg, nzero)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        z = scipy.linalg.solve_triangular(
            self.l, rhs[self.perm], lower=True, unit_diagonal=True)
        w = self._block_diag_solve(z)
        v = scipy.linalg.solve_triangular(
            self.l.T, w, lower=False, unit_diagonal=True)
        out = np.empty_like(v)
        out[self.perm] = v
        return out

    def _block_diag_solve(self, z: np.ndarray) -> np.ndarray:
        d = self.d
        n = d.shape[0]
        w = np.empty_like(z)
        i = 0
        while i < n:
            if i + 1 < n and d[i + 1, i] != 0.0:
                blk = d[i:i + 2, i:i + 2]
                det = blk[0, 0] * blk[1, 1] - blk[0, 1] * blk[1, 0]
                if det == 0.0:
                    raise FactorizationError("singular 2x2 pivot block")
                w[i] = (blk[1, 1] * z[i] - blk[0, 1] * z[i + 1]) / det
                w[i + 1] = (-blk[1, 0] * z[i] + blk[0, 0] * z[i + 1]) / det
                i += 2
            else:
                if d[i, i] == 0.0:
                    raise FactorizationError("zero pivot in dense LDL")
                w[i] = z[i] / d[i, i]
                i += 1
        return w


class KktFactor:
    """Factorization of a symmetric (quasi)definite system with refinement.

    The matrix is symmetrically equilibrated before factoring (a diagonal
    congruence, so the inertia is unchanged); solves map back to the
    original scaling and optionally refine against an unregularized target.
    """

    def __init__(self, kkt: sp.spmatrix, sign_hint: np.ndarray | None = None,
                 static_reg: float = 0.0, piv_tol: float = 1e-13,
                 piv_boost: float = 1e-8, dense_limit: int = DENSE_LIMIT,
                 perm: np.ndarray | None = None):
        kkt = sp.csc_matrix(kkt)
        n = kkt.shape[0]
        if sign_hint is None:
            sign_hint = np.ones(n, dtype=np.int8)
        self.kkt = kkt

        row_max = np.zeros(n)
        if kkt.nnz:
            mags = sp.csc_matrix(
                (np.abs(kkt.data), kkt.indices, kkt.indptr), shape=kkt.shape)
            row_max = np.asarray(mags.max(axis=0).todense()).ravel()
        self.scale = 1.0 / np.sqrt(np.maximum(row_max, 1e-300))
        self.scale[row_max == 0.0] = 1.0
        d = sp.diags(self.scale)
        scaled = sp.csc_matrix(d @ kkt @ d)
        if static_reg:
            # signed regularization on the equilibrated scale; solves refine
            # against the caller's unregularized target
            scaled = sp.csc_matrix(
                scaled + sp.diags(static_reg * sign_hint.astype(float)))

        self.dense = n < dense_limit
        if self.dense:
            self.impl = _DenseLdl(scaled.toarray())
        else:
            self.impl = _SparseLdl(scaled, sign_hint, piv_tol, piv_boost, perm)

    @property
    def inertia(self) -> tuple[int, int, int]:
        return self.impl.inertia

    @property
    def boosted(self) -> int:
        return getattr(self.impl, "boosted", 0)

    def _solve_scaled(self, rhs: np.ndarray) -> np.ndarray:
        return self.scale * self.impl.solve(rhs * self.scale)

    def solve(self, rhs: np.ndarray, target: sp.spmatrix | None = None,
              refine: int = 1) -> np.ndarray:
        """Solve against ``target`` (default: the factored matrix) with
        ``refine`` rounds of iterative refinement."""
        t = self.kkt if target is None else target
        x = self._solve_scaled(rhs)
        for _ in range(refine):
            r = rhs - t @ x
            x = x + self._solve_scaled(r)
        return x
