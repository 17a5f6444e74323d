import numpy as np
import pytest

from opfkit.formulations import reference_instance
from opfkit.formulations.residuals import ResidualReport
from opfkit.metrics import (MetricError, distance_to_feasible,
                            distance_to_optimal, optimality_gap,
                            timing_report, violation_stats)


class TestOptimalityGap:
    def test_basic(self):
        assert optimality_gap(105.0, 100.0) == pytest.approx(0.05)
        assert optimality_gap(100.0, 100.0) == 0.0

    def test_dc_toy_overdispatch(self):
        # pg = 1.1 on the 5-cost toy: (5.5 - 5) / 5
        assert optimality_gap(5.5, 5.0) == pytest.approx(0.10)

    def test_signed_not_clipped(self):
        assert optimality_gap(95.0, 100.0) == pytest.approx(-0.05)

    def test_zero_reference_rejected(self):
        with pytest.raises(MetricError):
            optimality_gap(1.0, 0.0)


class TestViolationStats:
    def test_example_group(self):
        rep = ResidualReport("dc", {"g": np.array([0.0, 0.1, 0.3])})
        st = violation_stats(rep, threshold=1e-6)["g"]
        assert st["mean"] == pytest.approx(0.4 / 3)
        assert st["max"] == pytest.approx(0.3)
        assert st["proportion_violated"] == pytest.approx(2 / 3)
        assert st["total"] == pytest.approx(0.4)

    def test_all_zero(self):
        rep = ResidualReport("dc", {"g": np.zeros(5)})
        st = violation_stats(rep)["g"]
        assert st == {"mean": 0.0, "max": 0.0,
                      "proportion_violated": 0.0, "total": 0.0}

    def test_negative_threshold_rejected(self):
        rep = ResidualReport("dc", {"g": np.zeros(1)})
        with pytest.raises(MetricError):
            violation_stats(rep, threshold=-1.0)


class TestDistances:
    def test_identical_points(self):
        a = {"pg": np.array([1.0, 2.0]), "va": np.zeros(3)}
        assert distance_to_optimal(a, a) == 0.0

    def test_single_coordinate(self):
        a = {"pg": np.array([1.0])}
        b = {"pg": np.array([1.3])}
        assert distance_to_optimal(a, b) == pytest.approx(0.3)

    def test_shape_mismatch(self):
        with pytest.raises(MetricError, match="pg"):
            distance_to_optimal({"pg": np.zeros(2)}, {"pg": np.zeros(3)})

    def test_projection_distance_dc_toy(self, dc_toy):
        inp = reference_instance(dc_toy)
        pred = {"pg": np.array([0.9]), "pf": np.array([0.9]),
                "va": np.array([0.0, -0.09])}
        out = distance_to_feasible("dc", dc_toy, inp, pred)
        exact = np.sqrt(0.1**2 + 0.1**2 + 0.01**2)
        assert out["distance"] == pytest.approx(0.141774, abs=1e-4)
        assert out["distance"] == pytest.approx(exact, abs=1e-6)
        proj = out["projected_point"]
        assert proj["pg"][0] == pytest.approx(1.0, abs=1e-5)

    def test_projection_of_feasible_point_is_zero(self, dc_toy):
        inp = reference_instance(dc_toy)
        pred = {"pg": np.array([1.0]), "pf": np.array([1.0]),
                "va": np.array([0.0, -0.1])}
        out = distance_to_feasible("dc", dc_toy, inp, pred)
        assert out["distance"] <= 1e-6

    def test_projected_point_feasible(self, dc_toy):
        from opfkit.formulations import evaluate_residuals

        inp = reference_instance(dc_toy)
        pred = {"pg": np.array([1.4]), "pf": np.array([0.2]),
                "va": np.array([0.0, 0.05])}
        out = distance_to_feasible("dc", dc_toy, inp, pred)
        rep = evaluate_residuals("dc", dc_toy, inp, out["projected_point"])
        assert rep.max_violation() <= 1e-6

    def test_bound_violation_lower_bounds_distance(self, dc_toy):
        inp = reference_instance(dc_toy)
        eps = 0.25
        pred = {"pg": np.array([2.0 + eps]), "pf": np.array([1.0]),
                "va": np.array([0.0, -0.1])}
        out = distance_to_feasible("dc", dc_toy, inp, pred)
        assert out["distance"] >= eps - 1e-6

    def test_ac_projection_on_toy(self, ac_toy):
        # the lossless inductive line absorbs 1 - cos(delta) reactive power
        # at each end, supplied by the local generators
        inp = reference_instance(ac_toy)
        q_end = 1 - np.sqrt(3) / 2
        opt = {"pg": np.array([0.5, 0.0]), "qg": np.array([q_end, q_end]),
               "vm": np.ones(2), "va": np.array([0.0, -np.pi / 6]),
               "pf": np.array([0.5]), "qf": np.array([q_end]),
               "pt": np.array([-0.5]), "qt": np.array([q_end])}
        out = distance_to_feasible("ac", ac_toy, inp, opt)
        assert out["distance"] <= 1e-3


class TestTiming:
    def test_processor_hours(self):
        records = {"solve_time": np.full(100, 36.0),
                   "build_time": np.zeros(100), "extract_time": np.zeros(100)}
        out = timing_report(records, workers=1)
        assert out["data_generation_time_cpu_hours"] == pytest.approx(1.0)

    def test_throughput_independent_of_workers(self):
        records = {"solve_time": np.full(100, 36.0),
                   "build_time": np.zeros(100), "extract_time": np.zeros(100)}
        out = timing_report(records, workers=4, wall_clock_s=900.0)
        assert out["data_generation_time_cpu_hours"] == pytest.approx(1.0)
        assert out["throughput_per_s"] == pytest.approx(100 / 900)

    def test_max_reported_separately(self):
        solve = np.array([1.0, 1.0, 6.0])
        records = {"solve_time": solve, "build_time": np.zeros(3),
                   "extract_time": np.zeros(3)}
        out = timing_report(records)
        assert out["per_instance"]["max"] == pytest.approx(6.0)
        assert out["per_instance"]["mean"] == pytest.approx(solve.mean())

    def test_negative_times_rejected(self):
        with pytest.raises(MetricError):
            timing_report({"solve_time": np.array([-1.0]),
                           "build_time": np.zeros(1),
                           "extract_time": np.zeros(1)})


class TestMetricInvariants:
    def test_feasible_distance_below_optimal_distance(self, dc_toy):
        from opfkit.metrics import distance_to_feasible, distance_to_optimal

        inp = reference_instance(dc_toy)
        optimum = {"pg": np.array([1.0]), "pf": np.array([1.0]),
                   "va": np.array([0.0, -0.1])}
        rng = np.random.default_rng(8)
        for _ in range(5):
            pred = {"pg": np.array([rng.uniform(0.0, 2.0)]),
                    "pf": np.array([rng.uniform(-2.0, 2.0)]),
                    "va": np.array([0.0, rng.uniform(-0.5, 0.5)])}
            d_feas = distance_to_feasible("dc", dc_toy, inp, pred)["distance"]
            d_opt = distance_to_optimal(pred, optimum)
            assert d_feas <= d_opt + 1e-6

    def test_projected_point_costs_at_least_optimum(self, dc_toy):
        from opfkit.metrics import distance_to_feasible, optimality_gap

        inp = reference_instance(dc_toy)
        pred = {"pg": np.array([0.4]), "pf": np.array([0.2]),
                "va": np.array([0.0, 0.3])}
        proj = distance_to_feasible("dc", dc_toy, inp, pred)["projected_point"]
        cost = float(np.asarray(dc_toy.cost) @ proj["pg"])
        assert optimality_gap(cost, 5.0) >= -1e-5
