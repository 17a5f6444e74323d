"""Benchmark metrics for predicted OPF solutions: optimality gap, grouped
constraint violations, distances to the feasible set and to the optimum,
and throughput/timing aggregation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .formulations import FORMULATIONS, evaluate_residuals
from .formulations.ac import AcopfNlp
from .formulations.common import ActiveSet
from .formulations.residuals import ResidualReport
from .network import Network
from .problems import SOC, Cone, ConicProblem
from .sampling import InstanceInput
from .solvers import SolverOptions, solve_conic, solve_nlp

GEN_VARS = ("pg", "qg")
BRANCH_VARS = ("pf", "qf", "pt", "qt", "wr", "wi")


class MetricError(ValueError):
    pass


def optimality_gap(predicted_objective: float, reference_objective: float) -> float:
    """(predicted - reference) / |reference|; signed, not clipped."""
    if reference_objective == 0.0:
        raise MetricError("reference objective is zero; gap undefined")
    return (predicted_objective - reference_objective) / abs(reference_objective)


def violation_stats(report: ResidualReport, threshold: float = 1e-6) -> dict:
    """Per-group mean/max, proportion of entries above threshold, and total."""
    if threshold < 0.0:
        raise MetricError("threshold must be nonnegative")
    out = {}
    for name, values in report.groups.items():
        v = np.asarray(values, dtype=float).ravel()
        if v.size == 0:
            out[name] = {"mean": 0.0, "max": 0.0,
                         "proportion_violated": 0.0, "total": 0.0}
            continue
        out[name] = {
            "mean": float(v.mean()),
            "max": float(v.max()),
            "proportion_violated": float((v > threshold).mean()),
            "total": float(v.sum()),
        }
    return out


def _pack_point(var_names: dict, act: ActiveSet, n: int, point: dict) -> np.ndarray:
    x = np.zeros(n)
    for name, slc in var_names.items():
        vals = np.asarray(point[name], dtype=float)
        if name in GEN_VARS:
            vals = vals[act.gens]
        elif name in BRANCH_VARS:
            vals = vals[act.branches]
        x[slc] = vals
    return x


def _unpack_point(var_names: dict, act: ActiveSet, x: np.ndarray) -> dict:
    out = {}
    for name, slc in var_names.items():
        vals = x[slc]
        if name in GEN_VARS:
            out[name] = act.expand_gen(vals)
        elif name in BRANCH_VARS:
            out[name] = act.expand_branch(vals)
        else:
            out[name] = vals.copy()
    return out


def distance_to_optimal(predicted_point: dict, optimal_point: dict,
                        keys: tuple[str, ...] | None = None) -> float:
    """Euclidean norm of the difference over the formulation variables."""
    keys = keys or tuple(sorted(predicted_point))
    total = 0.0
    for key in keys:
        a = np.asarray(predicted_point[key], dtype=float)
        b = np.asarray(optimal_point[key], dtype=float)
        if a.shape != b.shape:
            raise MetricError(f"shape mismatch for {key}: {a.shape} vs {b.shape}")
        total += float(((a - b) ** 2).sum())
    return float(np.sqrt(total))


def distance_to_feasible(kind: str, network: Network, inp: InstanceInput,
                         predicted_point: dict,
                         opts: SolverOptions | None = None) -> dict:
    """Project a prediction onto the formulation's feasible set.

    Linear/conic formulations get a norm-epigraph cone on top of the original
    constraints; the nonlinear formulation minimizes the squared distance.
    Returns {"distance", "projected_point"}.
    """
    kind = kind.lower()
    if kind == "ac":
        nlp = AcopfNlp(network, inp)
        target = _pack_point(nlp.var_names, nlp.act, nlp.n, predicted_point)
        proj = AcopfNlp(network, inp, distance_target=target)
        res = solve_nlp(proj, opts or SolverOptions(tol=1e-8, max_iter=400))
        if not res.status.is_solved:
            raise MetricError(f"projection solve failed: {res.status.value}")
        return {"distance": float(np.sqrt(2.0 * max(res.primal_objective, 0.0))),
                "projected_point": _unpack_point(nlp.var_names, nlp.act, res.x)}

    fname = {"dc": "DCOPF", "soc": "SOCOPF"}.get(kind)
    if fname is None:
        raise MetricError(f"unknown formulation kind {kind!r}")
    spec = FORMULATIONS[fname]
    base: ConicProblem = spec.build(network, inp)
    act = base.meta["active"]
    n = base.n_var
    target = _pack_point(base.var_names, act, n, predicted_point)

    import scipy.sparse as sp

    c = np.zeros(n + 1)
    c[n] = 1.0
    a_orig = sp.hstack([base.a, sp.csr_matrix((base.n_row, 1))], format="csr")
    epi = sp.hstack([
        sp.vstack([sp.csr_matrix((1, n)), sp.identity(n, format="csr")]),
        sp.csr_matrix(([1.0], ([0], [0])), shape=(n + 1, 1)),
    ], format="csr")
    a = sp.vstack([a_orig, epi], format="csr")
    b = np.concatenate([base.b, [0.0], target])
    cones = list(base.cones) + [Cone(SOC, n + 1)]
    prob = ConicProblem(c=c, a=a, b=b, cones=cones,
                        var_lb=None, var_ub=None, meta={"kind": "projection"})
    res = solve_conic(prob, opts or SolverOptions(tol=1e-8, max_iter=200))
    if not res.status.is_solved:
        raise MetricError(f"projection solve failed: {res.status.value}")
    return {"distance": float(res.x[n]),
            "projected_point": _unpack_point(base.var_names, act, res.x[:n])}


def timing_report(records: dict, workers: int = 1,
                  wall_clock_s: float | None = None) -> dict:
    """Aggregate stage timings into processor-hours plus per-instance stats.

    ``records`` maps stage name to per-sample second counts; the processor
    time sums solve/build/extract regardless of how many workers ran them.
    """
    solve = np.asarray(records.get("solve_time", []), dtype=float)
    build = np.asarray(records.get("build_time", []), dtype=float)
    extract = np.asarray(records.get("extract_time", []), dtype=float)
    for arr, name in ((solve, "solve_time"), (build, "build_time"),
                      (extract, "extract_time")):
        if arr.size and arr.min() < 0:
            raise MetricError(f"negative {name}")
    total_s = float(solve.sum() + build.sum() + extract.sum())
    out = {
        "data_generation_time_cpu_hours": total_s / 3600.0,
        "n_instances": int(solve.size),
        "workers": workers,
        "per_instance": {
            "mean": float(solve.mean()) if solve.size else 0.0,
            "std": float(solve.std()) if solve.size else 0.0,
            "max": float(solve.max()) if solve.size else 0.0,
        },
    }
    if wall_clock_s is not None and wall_clock_s > 0:
        out["wall_clock_s"] = wall_clock_s
        out["throughput_per_s"] = solve.size / wall_clock_s
    return out


# ---------------------------------------------------------------------------
# report container


@dataclass
class MetricReport:
    formulation: str
    per_instance: dict[str, list] = field(default_factory=dict)
    groups: dict[str, dict] = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def aggregates(self) -> dict:
        out = {}
        for name, values in self.per_instance.items():
            v = np.asarray(values, dtype=float)
            out[name] = {"mean": float(v.mean()) if v.size else 0.0,
                         "std": float(v.std()) if v.size else 0.0,
                         "max": float(v.max()) if v.size else 0.0}
        return out

    def to_json(self) -> str:
        return json.dumps({
            "formulation": self.formulation,
            "aggregates": self.aggregates(),
            "groups": self.groups,
            "per_instance": self.per_instance,
            **self.extras,
        }, indent=1)

    def to_text(self) -> str:
        lines = [f"formulation: {self.formulation}",
                 f"instances:   {len(next(iter(self.per_instance.values()), []))}",
                 ""]
        agg = self.aggregates()
        lines.append(f"{'metric':<24}{'mean':>14}{'std':>14}{'max':>14}")
        for name, st in agg.items():
            lines.append(f"{name:<24}{st['mean']:>14.6g}{st['std']:>14.6g}"
                         f"{st['max']:>14.6g}")
        if self.groups:
            lines.append("")
            lines.append(f"{'constraint group':<24}{'mean':>12}{'max':>12}"
                         f"{'violated':>12}{'total':>12}")
            for name, st in self.groups.items():
                lines.append(
                    f"{name:<24}{st['mean']:>12.4g}{st['max']:>12.4g}"
                    f"{st['proportion_violated']:>12.4g}{st['total']:>12.4g}")
        return "\n".join(lines) + "\n"


def evaluate_predictions(network: Network, inputs_of, points_of, ref_objectives,
                         formulation: str, threshold: float = 1e-6,
                         project: bool = False,
                         optimal_points=None) -> MetricReport:
    """Score predicted solutions instance by instance.

    ``inputs_of(k)`` and ``points_of(k)`` provide the instance and the
    predicted point; ``ref_objectives[k]`` is the true optimal value;
    ``optimal_points`` optionally provides the reference primal points.
    """
    spec = FORMULATIONS[formulation]
    kind = spec.kind
    n = len(ref_objectives)
    gaps, dmax, dtotal, dists, dopts = [], [], [], [], []
    group_entries: dict[str, list] = {}
    for k in range(n):
        inp = inputs_of(k)
        point = points_of(k)
        pred_obj = float(np.asarray(network.cost) @ np.asarray(point["pg"]))
        gaps.append(optimality_gap(pred_obj, float(ref_objectives[k])))
        report = evaluate_residuals(kind, network, inp, point)
        dmax.append(report.max_violation())
        dtotal.append(report.total_violation())
        for gname, vals in report.groups.items():
            group_entries.setdefault(gname, []).append(np.ravel(vals))
        if optimal_points is not None:
            dopts.append(distance_to_optimal(point, optimal_points(k),
                                             keys=spec.primal_keys))
        if project:
            dists.append(distance_to_feasible(kind, network, inp, point)["distance"])

    groups = {}
    for gname, chunks in group_entries.items():
        flat = np.concatenate(chunks) if chunks else np.zeros(0)
        rep = ResidualReport(kind, {gname: flat})
        groups[gname] = violation_stats(rep, threshold)[gname]

    per_instance = {"optimality_gap": gaps, "max_violation": dmax,
                    "total_violation": dtotal}
    if dopts:
        per_instance["distance_to_optimal"] = dopts
    if dists:
        per_instance["distance_to_feasible"] = dists
    return MetricReport(formulation=formulation, per_instance=per_instance,
                        groups=groups)
