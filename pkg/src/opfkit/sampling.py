"""Instance sampling: correlated demand draws, N-1 outages, spline time series.

Each sample is a pure function of ``(base_seed, sample_index)`` through a
counter-based PRNG, so generation is reproducible regardless of worker count
or evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .network import Network, connected

MASK64 = (1 << 64) - 1

MODES = ("demand-only", "n-1", "timeseries")


class SamplingError(ValueError):
    pass


def mix_seed(base_seed: int, sample_index: int) -> int:
    """SplitMix64 mix of base seed and sample index into a 64-bit stream key."""
    z = (base_seed + 0x9E3779B97F4A7C15 * (sample_index + 1)) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def stream(seed: int) -> np.random.Generator:
    """Counter-based generator for one sample."""
    return np.random.Generator(np.random.Philox(key=seed))


@dataclass(frozen=True)
class SamplerConfig:
    b_l: float
    b_u: float
    eps: float
    mode: str = "demand-only"
    base_seed: int = 0
    # require remaining capacity to cover the largest samplable demand when
    # disabling a generator; turn off to allow unconditionally
    capacity_screen: bool = True

    def __post_init__(self):
        if not 0.0 < self.b_l <= self.b_u:
            raise SamplingError(f"need 0 < b_l <= b_u, got ({self.b_l}, {self.b_u})")
        if not 0.0 <= self.eps < 1.0:
            raise SamplingError(f"need 0 <= eps < 1, got {self.eps}")
        if self.mode not in MODES:
            raise SamplingError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class InstanceInput:
    """One sampled instance: demands plus equipment statuses."""

    pd: np.ndarray
    qd: np.ndarray
    branch_status: np.ndarray
    gen_status: np.ndarray
    seed: int

    def __post_init__(self):
        for a in (self.pd, self.qd, self.branch_status, self.gen_status):
            a.setflags(write=False)

    def n_disabled(self) -> int:
        return int((self.branch_status == 0).sum() + (self.gen_status == 0).sum())


def _draw_demand(network: Network, config: SamplerConfig,
                 rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    nl = network.n_load
    b = rng.uniform(config.b_l, config.b_u)
    eps_p = rng.uniform(1.0 - config.eps, 1.0 + config.eps, nl)
    eps_q = rng.uniform(1.0 - config.eps, 1.0 + config.eps, nl)
    return b * eps_p * network.pd_ref, b * eps_q * network.qd_ref


def sample_demand(network: Network, config: SamplerConfig,
                  sample_index: int) -> InstanceInput:
    """Demand-only sample: one global scale times independent local noise.

    A single global factor b ~ U(b_l, b_u) correlates all loads in the sample;
    per-load factors ~ U(1-eps, 1+eps) are drawn independently for active and
    reactive demand, so power factors vary.
    """
    if network.n_load == 0:
        raise SamplingError("network has no loads to sample")
    seed = mix_seed(config.base_seed, sample_index)
    pd, qd = _draw_demand(network, config, stream(seed))
    return InstanceInput(pd=pd, qd=qd,
                         branch_status=np.ones(network.n_branch, dtype=np.int8),
                         gen_status=np.ones(network.n_gen, dtype=np.int8),
                         seed=seed)


def find_bridges(network: Network) -> set[int]:
    """Branch indices whose removal disconnects the grid graph.

    Iterative Tarjan lowpoint search keyed on edge ids, so a branch parallel
    to another with the same endpoints is never a bridge.
    """
    nb, ne = network.n_bus, network.n_branch
    if not connected(nb, network.branch_from, network.branch_to):
        raise SamplingError("bridge search requires a connected graph")
    adj: list[list[tuple[int, int]]] = [[] for _ in range(nb)]
    for e in range(ne):
        i, j = int(network.branch_from[e]), int(network.branch_to[e])
        adj[i].append((e, j))
        adj[j].append((e, i))

    disc = np.full(nb, -1, dtype=np.int64)
    low = np.zeros(nb, dtype=np.int64)
    bridges: set[int] = set()
    counter = 0
    for root in range(nb):
        if disc[root] != -1:
            continue
        # stack entries: (node, edge id used to enter, iterator position)
        stack = [(root, -1, iter(adj[root]))]
        disc[root] = low[root] = counter
        counter += 1
        while stack:
            u, in_edge, it = stack[-1]
            advanced = False
            for e, v in it:
                if e == in_edge:
                    continue
                if disc[v] == -1:
                    disc[v] = low[v] = counter
                    counter += 1
                    stack.append((v, e, iter(adj[v])))
                    advanced = True
                    break
                low[u] = min(low[u], disc[v])
            if not advanced:
                stack.pop()
                if stack:
                    p = stack[-1][0]
                    low[p] = min(low[p], low[u])
                    if low[u] > disc[p]:
                        bridges.add(in_edge)
    return bridges


def eligible_outages(network: Network, config: SamplerConfig) -> tuple[list[int], list[int]]:
    """Branches and generators that may be disabled in an N-1 instance."""
    branch_ok = sorted(set(range(network.n_branch)) - find_bridges(network))
    total_pmax = float(network.pgmax.sum())
    demand_cap = config.b_u * (1.0 + config.eps) * network.total_pd()
    gens_ok = []
    for k in range(network.n_gen):
        if config.capacity_screen and total_pmax - network.pgmax[k] < demand_cap:
            continue
        gens_ok.append(k)
    return branch_ok, gens_ok


def sample_status(network: Network, config: SamplerConfig,
                  sample_index: int) -> InstanceInput:
    """N-1 sample: disable one non-bridge branch or one eligible generator,
    chosen uniformly, then sample demand as in ``sample_demand``."""
    branch_ok, gens_ok = eligible_outages(network, config)
    n_choices = len(branch_ok) + len(gens_ok)
    if n_choices == 0:
        raise SamplingError("no branch or generator is eligible for outage")
    seed = mix_seed(config.base_seed, sample_index)
    rng = stream(seed)
    pick = int(rng.integers(n_choices))
    branch_status = np.ones(network.n_branch, dtype=np.int8)
    gen_status = np.ones(network.n_gen, dtype=np.int8)
    if pick < len(branch_ok):
        branch_status[branch_ok[pick]] = 0
    else:
        gen_status[gens_ok[pick - len(branch_ok)]] = 0
    pd, qd = _draw_demand(network, config, rng)
    return InstanceInput(pd=pd, qd=qd, branch_status=branch_status,
                         gen_status=gen_status, seed=seed)


def sample_instance(network: Network, config: SamplerConfig,
                    sample_index: int) -> InstanceInput:
    if config.mode == "n-1":
        return sample_status(network, config, sample_index)
    return sample_demand(network, config, sample_index)


# ---------------------------------------------------------------------------
# time series refinement


@dataclass
class TimeSeriesDiagnostics:
    clamped: int = 0


def refine_timeseries(knots: list[tuple[float, np.ndarray]], step: float,
                      network: Network, base_seed: int = 0,
                      diagnostics: TimeSeriesDiagnostics | None = None,
                      ) -> list[InstanceInput]:
    """Densify a demand time series with a natural cubic spline per load.

    ``knots`` are (time, per-load active demand vector) pairs at strictly
    increasing times; output instances sit on the regular grid with the given
    step.  Reactive demand is scaled from the reference power factor; negative
    interpolated demands are clamped to zero and counted in ``diagnostics``.
    """
    times, grid, values = spline_grid(knots, step)
    out = []
    ratio = np.divide(network.qd_ref, network.pd_ref,
                      out=np.zeros_like(network.qd_ref),
                      where=network.pd_ref != 0.0)
    fallback_qd = np.where(network.pd_ref == 0.0, network.qd_ref, 0.0)
    for k, t in enumerate(grid):
        pd = values[k]
        neg = pd < 0.0
        if neg.any():
            if diagnostics is not None:
                diagnostics.clamped += int(neg.sum())
            pd = np.where(neg, 0.0, pd)
        qd = pd * ratio + fallback_qd
        out.append(InstanceInput(
            pd=pd, qd=qd,
            branch_status=np.ones(network.n_branch, dtype=np.int8),
            gen_status=np.ones(network.n_gen, dtype=np.int8),
            seed=mix_seed(base_seed, k)))
    return out


def spline_grid(knots: list[tuple[float, np.ndarray]],
                step: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Natural-spline interpolation of knot vectors onto a regular grid."""
    if len(knots) < 3:
        raise SamplingError(f"need at least 3 knots, got {len(knots)}")
    if step <= 0.0:
        raise SamplingError("step must be positive")
    times = np.asarray([t for t, _ in knots], dtype=float)
    if np.any(np.diff(times) <= 0.0):
        raise SamplingError("knot times must be strictly increasing")
    data = np.vstack([np.atleast_1d(np.asarray(v, dtype=float)) for _, v in knots])
    spline = CubicSpline(times, data, axis=0, bc_type="natural")
    n_steps = int(np.floor((times[-1] - times[0]) / step + 1e-9))
    grid = times[0] + step * np.arange(n_steps + 1)
    return times, grid, spline(grid)


def read_timeseries_knots(path) -> list[tuple[float, np.ndarray]]:
    """Read `time,load_1,...,load_L` rows (times in seconds) from a text file."""
    with open(path, encoding="utf-8") as f:
        header = f.readline().strip().split(",")
        if not header or header[0].strip() != "time":
            raise SamplingError(f"{path}: first column must be 'time'")
        knots = []
        for line_no, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != len(header):
                raise SamplingError(
                    f"{path}:{line_no}: expected {len(header)} columns")
            try:
                row = [float(c) for c in cells]
            except ValueError:
                raise SamplingError(f"{path}:{line_no}: non-numeric cell") from None
            knots.append((row[0], np.asarray(row[1:])))
    return knots
