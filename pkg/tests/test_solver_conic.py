import numpy as np
import pytest
import scipy.sparse as sp

from opfkit.problems import NONNEG, RSOC, SOC, ZERO, Cone, ConicProblem
from opfkit.solvers import Status, solve_conic, solve_lp
from opfkit.solvers.conic import ConeSpace, _soc_max_step


def box_lp(lo=1.0, hi=10.0, c=1.0):
    return ConicProblem(
        c=np.array([c]),
        a=sp.csr_matrix(np.array([[1.0], [-1.0]])),
        b=np.array([lo, -hi]),
        cones=[Cone(NONNEG, 2)],
        var_lb=np.array([lo]), var_ub=np.array([hi]))


class TestLp:
    def test_box_minimum(self):
        res = solve_lp(box_lp())
        assert res.status == Status.OPTIMAL
        assert res.x[0] == pytest.approx(1.0, abs=1e-7)
        assert res.primal_objective == pytest.approx(1.0, abs=1e-7)
        # lower-bound row dual carries the full cost gradient
        assert res.y[0] == pytest.approx(1.0, abs=1e-7)
        assert abs(res.primal_objective - res.dual_objective) <= 1e-7

    def test_infeasible_box(self):
        res = solve_lp(box_lp(lo=2.0, hi=1.0))
        assert res.status == Status.INFEASIBLE_OR_UNBOUNDED

    def test_unbounded_detected(self):
        prob = ConicProblem(
            c=np.array([-1.0]),
            a=sp.csr_matrix(np.array([[1.0]])),
            b=np.array([0.0]),
            cones=[Cone(NONNEG, 1)])
        res = solve_lp(prob)
        assert res.status == Status.INFEASIBLE_OR_UNBOUNDED

    def test_rejects_soc_rows(self):
        prob = ConicProblem(
            c=np.zeros(1), a=sp.csr_matrix(np.zeros((3, 1))),
            b=np.zeros(3), cones=[Cone(SOC, 3)])
        with pytest.raises(ValueError, match="solve_lp"):
            solve_lp(prob)

    def test_random_lps_strong_duality(self):
        rng = np.random.default_rng(11)
        for _ in range(15):
            n, meq = 8, 3
            a_eq = rng.normal(size=(meq, n))
            x0 = rng.uniform(0.5, 1.5, n)
            c = rng.uniform(0.5, 2.0, n) * 10.0 ** rng.integers(0, 3)
            rows = np.vstack([a_eq, np.eye(n), -np.eye(n)])
            b = np.concatenate([a_eq @ x0, np.full(n, -3.0), np.full(n, -3.0)])
            prob = ConicProblem(
                c=c, a=sp.csr_matrix(rows), b=b,
                cones=[Cone(ZERO, meq), Cone(NONNEG, 2 * n)],
                var_lb=np.full(n, -3.0), var_ub=np.full(n, 3.0))
            res = solve_lp(prob)
            assert res.status == Status.OPTIMAL
            gap = abs(res.primal_objective - res.dual_objective)
            assert gap <= 1e-6 * (1.0 + abs(res.primal_objective))
            # dual feasibility: A'y = c within tolerance, nonneg duals >= 0
            assert np.max(np.abs(prob.a.T @ res.y - c)) <= 1e-6
            assert res.y[meq:].min() >= -1e-7

    def test_deterministic(self):
        prob = box_lp()
        a = solve_lp(prob)
        b = solve_lp(prob)
        assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)
        assert a.iterations == b.iterations


class TestSoc:
    def test_norm_epigraph(self):
        prob = ConicProblem(
            c=np.array([1.0]),
            a=sp.csr_matrix(np.array([[1.0], [0.0], [0.0]])),
            b=np.array([0.0, -3.0, -4.0]),
            cones=[Cone(SOC, 3)],
            var_lb=np.array([0.0]), var_ub=np.array([100.0]))
        res = solve_conic(prob)
        assert res.status == Status.OPTIMAL
        assert res.x[0] == pytest.approx(5.0, abs=1e-6)

    def test_rotated_cone_boundary(self):
        """max wr with the product relaxation at w_i = w_j = 1 and wi = 0."""
        s2 = np.sqrt(0.5)
        rows = np.array([[0.0, 1.0],      # wi = 0
                         [0.0, 0.0],      # head 1/sqrt2
                         [0.0, 0.0],      # head 1/sqrt2
                         [1.0, 0.0],      # wr
                         [0.0, 1.0]])     # wi
        prob = ConicProblem(
            c=np.array([-1.0, 0.0]),
            a=sp.csr_matrix(rows),
            b=np.array([0.0, -s2, -s2, 0.0, 0.0]),
            cones=[Cone(ZERO, 1), Cone(RSOC, 4)],
            var_lb=np.array([-2.0, -2.0]), var_ub=np.array([2.0, 2.0]))
        res = solve_conic(prob)
        assert res.status == Status.OPTIMAL
        assert res.x[0] == pytest.approx(1.0, abs=1e-6)
        assert res.x[1] == pytest.approx(0.0, abs=1e-6)

    def test_random_socps(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            n = 10
            c = rng.normal(size=n) * rng.choice([1.0, 100.0])
            f = rng.normal(size=(3, n))
            x0 = rng.uniform(-0.5, 0.5, n)
            rows = [f, np.eye(n), -np.eye(n)]
            b = [f @ x0, np.full(n, -2.0), np.full(n, -2.0)]
            cones = [Cone(ZERO, 3), Cone(NONNEG, n), Cone(NONNEG, n)]
            for _ in range(2):
                m = rng.normal(size=(2, n)) * 0.3
                rows += [np.zeros((1, n)), m]
                b += [np.array([-3.0]), m @ x0 + rng.normal(size=2) * 0.01]
                cones.append(Cone(SOC, 3))
            prob = ConicProblem(
                c=c, a=sp.csr_matrix(np.vstack(rows)), b=np.concatenate(b),
                cones=cones, var_lb=np.full(n, -2.0), var_ub=np.full(n, 2.0))
            res = solve_conic(prob)
            assert res.status == Status.OPTIMAL
            gap = abs(res.primal_objective - res.dual_objective)
            assert gap <= 1e-6 * (1.0 + abs(res.primal_objective))
            assert np.max(np.abs(prob.a.T @ res.y - c)) <= 1e-6
            # primal feasibility of the reported point
            resid = prob.a @ res.x - prob.b
            assert np.max(np.abs(resid[:3])) <= 1e-6

    def test_infeasible_soc(self):
        # ||(x, x)|| <= 0.1 together with x >= 1
        rows = np.array([[1.0], [0.0], [1.0], [1.0]])
        prob = ConicProblem(
            c=np.array([1.0]),
            a=sp.csr_matrix(rows),
            b=np.array([1.0, -0.1, 0.0, 0.0]),
            cones=[Cone(NONNEG, 1), Cone(SOC, 3)],
            var_lb=np.array([1.0]), var_ub=np.array([2.0]))
        res = solve_conic(prob)
        assert res.status == Status.INFEASIBLE_OR_UNBOUNDED


class TestConeSpace:
    def test_nt_scaling_identity(self):
        rng = np.random.default_rng(3)
        space = ConeSpace(4, [3, 4])
        for _ in range(50):
            s = np.concatenate([rng.uniform(0.1, 5.0, 4),
                                _interior(rng, 3), _interior(rng, 4)])
            z = np.concatenate([rng.uniform(0.1, 5.0, 4),
                                _interior(rng, 3), _interior(rng, 4)])
            scaling = space.nt_scaling(s, z)
            np.testing.assert_allclose(scaling.apply(z), scaling.apply_inv(s),
                                       rtol=1e-10, atol=1e-12)

    def test_jprod_jdiv_roundtrip(self):
        rng = np.random.default_rng(5)
        space = ConeSpace(2, [4])
        lam = np.concatenate([rng.uniform(0.5, 2.0, 2), _interior(rng, 4)])
        d = rng.normal(size=6)
        x = space.jdiv(lam, d)
        np.testing.assert_allclose(space.jprod(lam, x), d, atol=1e-12)

    def test_max_step_against_bisection(self):
        rng = np.random.default_rng(7)
        for _ in range(500):
            u = _interior(rng, 3)
            du = rng.normal(size=3) * rng.choice([0.1, 1.0, 10.0])
            t = _soc_max_step(u, du)
            t_ref = _bisection_step(u, du)
            if np.isinf(t_ref):
                assert t > 1e5
            else:
                assert t == pytest.approx(t_ref, rel=1e-5, abs=1e-7)


def _interior(rng, dim):
    tail = rng.normal(size=dim - 1)
    head = np.linalg.norm(tail) + rng.uniform(0.1, 2.0)
    return np.concatenate([[head], tail])


def _bisection_step(u, du, hi=1e6):
    def inside(t):
        v = u + t * du
        return v[0] >= 0 and v[0] * v[0] - v[1:] @ v[1:] >= -1e-14

    if inside(hi):
        return np.inf
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if inside(mid):
            lo = mid
        else:
            hi = mid
    return lo
