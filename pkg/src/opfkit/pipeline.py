"""End-to-end generation pipeline: configuration, parallel sample solving,
dataset assembly, and run summaries.

Samples are pure functions of ``(base_seed, index)``, so the emitted arrays
are identical no matter how many workers run or whether a run is repeated.
"""

from __future__ import annotations

import configparser
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import SampleRecord, write_dataset
from .formulations import FORMULATIONS
from .matpower import make_basic, read_case
from .metrics import timing_report
from .network import Network
from .sampling import (InstanceInput, SamplerConfig, mix_seed,
                       read_timeseries_knots, refine_timeseries, stream)
from .solvers import SolverOptions

WORKER_ENV = "OPFKIT_WORKERS"
AC_RESTARTS = 2  # extra perturbed starts when the first NLP solve fails


class PipelineError(RuntimeError):
    pass


@dataclass(frozen=True)
class GenerationConfig:
    case_file: str
    case_name: str = ""
    linearize_costs: bool = False
    mode: str = "demand-only"
    b_l: float = 0.8
    b_u: float = 1.2
    eps: float = 0.2
    n_samples: int = 10
    base_seed: int = 0
    capacity_screen: bool = True
    timeseries_file: str = ""
    timeseries_step: float = 300.0
    formulations: tuple[str, ...] = ("ACOPF", "DCOPF", "SOCOPF")
    workers: int = 1
    output_dir: str = "dataset"
    raw_text: str = ""

    def sampler(self) -> SamplerConfig:
        return SamplerConfig(b_l=self.b_l, b_u=self.b_u, eps=self.eps,
                             mode=self.mode, base_seed=self.base_seed,
                             capacity_screen=self.capacity_screen)


def load_config(path) -> GenerationConfig:
    parser = configparser.ConfigParser()
    text = Path(path).read_text(encoding="utf-8")
    parser.read_string(text)
    try:
        case = parser["case"]
        sampler = parser["sampler"]
        out = parser["output"]
    except KeyError as exc:
        raise PipelineError(f"config is missing section {exc}") from None
    run = parser["run"] if parser.has_section("run") else {}

    formulations = tuple(
        name.strip().upper()
        for name in run.get("formulations", "ACOPF,DCOPF,SOCOPF").split(",")
        if name.strip())
    for name in formulations:
        if name not in FORMULATIONS:
            raise PipelineError(f"unknown formulation {name!r}")

    workers = int(os.environ.get(WORKER_ENV, run.get("workers", "1")))
    return GenerationConfig(
        case_file=case.get("file"),
        case_name=case.get("name", ""),
        linearize_costs=case.getboolean("linearize_costs", fallback=False),
        mode=sampler.get("mode", "demand-only"),
        b_l=sampler.getfloat("b_l", fallback=0.8),
        b_u=sampler.getfloat("b_u", fallback=1.2),
        eps=sampler.getfloat("eps", fallback=0.2),
        n_samples=sampler.getint("samples", fallback=10),
        base_seed=sampler.getint("base_seed", fallback=0),
        capacity_screen=sampler.getboolean("capacity_screen", fallback=True),
        timeseries_file=sampler.get("timeseries_file", fallback=""),
        timeseries_step=sampler.getfloat("timeseries_step", fallback=300.0),
        formulations=formulations,
        workers=max(1, workers),
        output_dir=out.get("dir"),
        raw_text=text)


def load_network(config: GenerationConfig) -> Network:
    raw = read_case(config.case_file)
    if config.case_name:
        raw.name = config.case_name
    return make_basic(raw, linearize_costs=config.linearize_costs)


def build_inputs(network: Network, config: GenerationConfig) -> list[InstanceInput]:
    if config.mode == "timeseries":
        if not config.timeseries_file:
            raise PipelineError("timeseries mode needs sampler.timeseries_file")
        knots = read_timeseries_knots(config.timeseries_file)
        return refine_timeseries(knots, config.timeseries_step, network,
                                 base_seed=config.base_seed)
    sampler = config.sampler()
    from .sampling import sample_instance

    return [sample_instance(network, sampler, k) for k in range(config.n_samples)]


# ---------------------------------------------------------------------------
# one sample end to end


def solve_sample(network: Network, inp: InstanceInput, index: int,
                 formulations: tuple[str, ...],
                 options: dict[str, SolverOptions] | None = None) -> SampleRecord:
    record = SampleRecord(index=index, inp=inp)
    for fname in formulations:
        spec = FORMULATIONS[fname]
        opts = (options or {}).get(fname, spec.default_options)

        t0 = time.perf_counter()
        problem = spec.build(network, inp)
        build_time = time.perf_counter() - t0

        result = spec.solve(problem, opts)
        if fname == "ACOPF" and not result.status.is_solved:
            result = _retry_ac(problem, opts, inp, result)
        solve_time = result.solve_time

        t0 = time.perf_counter()
        if result.status.is_solved:
            primal = spec.extract_primal(problem, result)
            dual = spec.extract_dual(problem, result)
        else:
            primal = _zero_arrays(network, fname, "primal")
            dual = _zero_arrays(network, fname, "dual")
        extract_time = time.perf_counter() - t0

        record.primal[fname] = primal
        record.dual[fname] = dual
        record.meta[fname] = {
            "formulation": fname,
            "termination_status": result.status.value,
            "primal_status": "FEASIBLE_POINT" if result.status.is_solved
                             else "UNKNOWN",
            "dual_status": "FEASIBLE_POINT" if result.status.is_solved
                           else "UNKNOWN",
            "solve_time": solve_time,
            "build_time": build_time,
            "extract_time": extract_time,
            "primal_objective_value": result.primal_objective,
            "dual_objective_value": result.dual_objective,
            "seed": inp.seed,
        }
    return record


def _retry_ac(problem, opts, inp, first):
    """Perturbed midpoint restarts for stubborn nonlinear solves."""
    from .solvers import solve_nlp

    best = first
    for attempt in range(AC_RESTARTS):
        rng = stream(mix_seed(inp.seed, 7000 + attempt))
        x0 = problem.initial_point()
        lo = np.where(np.isfinite(problem.var_lb), problem.var_lb, x0 - 0.3)
        hi = np.where(np.isfinite(problem.var_ub), problem.var_ub, x0 + 0.3)
        x0 = lo + rng.uniform(0.25, 0.75, problem.n) * (hi - lo)
        result = solve_nlp(problem, opts, warm_start=x0)
        if result.status.is_solved:
            return result
        best = result
    return best


def _zero_arrays(network: Network, fname: str, part: str) -> dict[str, np.ndarray]:
    from .dataset import expected_shapes

    shapes = expected_shapes(network, fname, 1)
    out = {}
    prefix = part + "/"
    for key, shape in shapes.items():
        if key.startswith(prefix):
            out[key[len(prefix):]] = np.zeros(shape[1:])
    return out


# ---------------------------------------------------------------------------
# parallel driver

_CTX: dict = {}


def _init_worker(network, formulations):
    _CTX["network"] = network
    _CTX["formulations"] = formulations


def _run_one(args):
    index, inp = args
    return solve_sample(_CTX["network"], inp, index, _CTX["formulations"])


def generate(config: GenerationConfig) -> dict:
    """Run the full pipeline; returns a summary dict."""
    t_start = time.perf_counter()
    network = load_network(config)
    inputs = build_inputs(network, config)
    tasks = list(enumerate(inputs))

    if config.workers == 1:
        records = [solve_sample(network, inp, k, config.formulations)
                   for k, inp in tasks]
    else:
        with ProcessPoolExecutor(
                max_workers=config.workers,
                initializer=_init_worker,
                initargs=(network, config.formulations)) as pool:
            records = list(pool.map(_run_one, tasks, chunksize=1))
    records.sort(key=lambda r: r.index)

    splits = write_dataset(config.output_dir, network, records,
                           list(config.formulations), config.raw_text)
    wall = time.perf_counter() - t_start

    times = {"solve_time": [], "build_time": [], "extract_time": []}
    for rec in records:
        for meta in rec.meta.values():
            for key in times:
                times[key].append(meta[key])
    timing = timing_report(times, workers=config.workers, wall_clock_s=wall)
    return {
        "case": network.name,
        "n_samples": len(records),
        "splits": {k: len(v) for k, v in splits.items()},
        "wall_clock_s": wall,
        "cpu_hours": timing["data_generation_time_cpu_hours"],
        "output_dir": str(config.output_dir),
    }
