"""Dataset serialization: case description, per-split HDF5 groups, and the
deterministic train/test/infeasible split.

Layout (one directory per case):

    <root>/
      case.json
      <split>/                 split in {train, test, infeasible}
        input.h5               data/{pd,qd,branch_status,gen_status}, meta/{seeds,config}
        <formulation>/         formulation in {ACOPF, DCOPF, SOCOPF}
          primal.h5            named primal arrays, first dim = sample count
          dual.h5              named dual arrays
          meta.h5              per-sample objectives, statuses, timings, seed

All indices stored in case.json are 1-based; in-memory indices are 0-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import h5py
import numpy as np

from .formulations import FORMULATIONS
from .network import IncidenceCOO, Network, build_incidence
from .sampling import InstanceInput, stream

SPLITS = ("train", "test", "infeasible")
SPLIT_SEED = 42
TRAIN_FRACTION = 0.8

INPUT_KEYS = ("pd", "qd", "branch_status", "gen_status")
META_KEYS = ("formulation", "termination_status", "primal_status",
             "dual_status", "solve_time", "build_time", "extract_time",
             "primal_objective_value", "dual_objective_value", "seed")
STRING_META = ("formulation", "termination_status", "primal_status",
               "dual_status")


class DatasetError(ValueError):
    pass


# ---------------------------------------------------------------------------
# case.json


def _coo_payload(coo: IncidenceCOO) -> dict:
    return {"shape": list(coo.shape),
            "rows": coo.rows.astype(int).tolist(),
            "cols": coo.cols.astype(int).tolist(),
            "values": coo.values.tolist()}


def case_payload(network: Network) -> dict:
    """JSON-ready description of a preprocessed network (1-based indices)."""
    a, ag = build_incidence(network)
    bf = [[int(e) + 1 for e in arr] for arr in network.branches_from_bus]
    bt = [[int(e) + 1 for e in arr] for arr in network.branches_to_bus]
    bg = [[int(g) + 1 for g in arr] for arr in network.gens_at_bus]
    bl = [[int(l) + 1 for l in arr] for arr in network.loads_at_bus]
    payload = {
        "case": network.name,
        "N": network.n_bus, "E": network.n_branch,
        "L": network.n_load, "G": network.n_gen,
        "ref_bus": network.ref_bus + 1,
        "base_mva": network.base_mva,
        "vnom": network.vnom.tolist(),
        "pd": network.pd_ref.tolist(),
        "qd": network.qd_ref.tolist(),
        "A": _coo_payload(a),
        "Ag": _coo_payload(ag),
        "bus_arcs_fr": bf, "bus_arcs_to": bt,
        "bus_gens": bg, "bus_loads": bl,
        "gs": network.gs.tolist(), "bs": network.bs.tolist(),
        "vmin": network.vmin.tolist(), "vmax": network.vmax.tolist(),
        "dvamin": network.dva_min.tolist(), "dvamax": network.dva_max.tolist(),
        "smax": network.smax.tolist(),
        "pgmin": network.pgmin.tolist(), "pgmax": network.pgmax.tolist(),
        "qgmin": network.qgmin.tolist(), "qgmax": network.qgmax.tolist(),
        "c1": network.cost.tolist(),
        "gen_bus": (network.gen_bus + 1).tolist(),
        "load_bus": (network.load_bus + 1).tolist(),
        "bus_fr": (network.branch_from + 1).tolist(),
        "bus_to": (network.branch_to + 1).tolist(),
        "g": network.g.tolist(), "b": network.b.tolist(),
    }
    for key in ("gff", "gft", "gtf", "gtt", "bff", "bft", "btf", "btt"):
        payload[key] = getattr(network, key).tolist()
    return payload


def write_case_json(network: Network, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(case_payload(network), f, indent=1)
        f.write("\n")


def read_case_json(path) -> Network:
    with open(path, encoding="utf-8") as f:
        d = json.load(f)
    arr = lambda k: np.asarray(d[k], dtype=float)  # noqa: E731
    idx = lambda k: np.asarray(d[k], dtype=np.int64) - 1  # noqa: E731
    return Network(
        name=d["case"], base_mva=float(d["base_mva"]),
        ref_bus=int(d["ref_bus"]) - 1,
        gs=arr("gs"), bs=arr("bs"), vmin=arr("vmin"), vmax=arr("vmax"),
        vnom=arr("vnom"),
        gen_bus=idx("gen_bus"),
        pgmin=arr("pgmin"), pgmax=arr("pgmax"),
        qgmin=arr("qgmin"), qgmax=arr("qgmax"), cost=arr("c1"),
        load_bus=idx("load_bus"), pd_ref=arr("pd"), qd_ref=arr("qd"),
        branch_from=idx("bus_fr"), branch_to=idx("bus_to"),
        g=arr("g"), b=arr("b"),
        gff=arr("gff"), bff=arr("bff"), gft=arr("gft"), bft=arr("bft"),
        gtf=arr("gtf"), btf=arr("btf"), gtt=arr("gtt"), btt=arr("btt"),
        smax=arr("smax"), dva_min=arr("dvamin"), dva_max=arr("dvamax"))


# ---------------------------------------------------------------------------
# per-sample records


@dataclass
class SampleRecord:
    """Everything produced for one sample index."""

    index: int
    inp: InstanceInput
    # formulation name -> dict of named arrays / scalars
    primal: dict = field(default_factory=dict)
    dual: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def feasible(self, formulations) -> bool:
        return all(
            self.meta.get(f, {}).get("termination_status")
            in ("optimal", "locally-optimal")
            for f in formulations)


def split_dataset(flags: list[bool]) -> dict[str, list[int]]:
    """Deterministic split: shuffle the feasible indices (Fisher-Yates with
    the fixed seed), first 80% train, rest test; infeasible kept aside."""
    feasible = [k for k, ok in enumerate(flags) if ok]
    infeasible = [k for k, ok in enumerate(flags) if not ok]
    rng = stream(SPLIT_SEED)
    shuffled = list(feasible)
    for k in range(len(shuffled) - 1, 0, -1):
        j = int(rng.integers(k + 1))
        shuffled[k], shuffled[j] = shuffled[j], shuffled[k]
    n_train = int(np.floor(TRAIN_FRACTION * len(shuffled)))
    return {"train": shuffled[:n_train],
            "test": shuffled[n_train:],
            "infeasible": infeasible}


# ---------------------------------------------------------------------------
# writers


def _write_arrays(group: h5py.Group, arrays: dict[str, np.ndarray]):
    for key, val in arrays.items():
        group.create_dataset(key, data=val)


def write_dataset(root, network: Network, records: list[SampleRecord],
                  formulations: list[str], config_text: str = "") -> dict:
    """Write the full layout; returns the index lists per split."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    write_case_json(network, root / "case.json")

    order = {rec.index: rec for rec in records}
    if sorted(order) != list(range(len(records))):
        raise DatasetError("sample indices must be 0..N-1 without gaps")
    flags = [order[k].feasible(formulations) for k in range(len(records))]
    splits = split_dataset(flags)

    for split, indices in splits.items():
        split_dir = root / split
        split_dir.mkdir(parents=True, exist_ok=True)
        recs = [order[k] for k in indices]
        _write_input(split_dir / "input.h5", network, recs, config_text)
        for fname in formulations:
            fdir = split_dir / fname
            fdir.mkdir(exist_ok=True)
            _write_formulation(fdir, fname, recs, network)
    return splits


def _write_input(path, network, recs, config_text):
    n = len(recs)
    with h5py.File(path, "w") as f:
        data = f.create_group("data")
        _write_arrays(data, {
            "pd": _stack(recs, lambda r: r.inp.pd, (n, network.n_load)),
            "qd": _stack(recs, lambda r: r.inp.qd, (n, network.n_load)),
            "branch_status": _stack(recs, lambda r: r.inp.branch_status,
                                    (n, network.n_branch)).astype(np.int8),
            "gen_status": _stack(recs, lambda r: r.inp.gen_status,
                                 (n, network.n_gen)).astype(np.int8),
        })
        meta = f.create_group("meta")
        meta.create_dataset("seeds", data=np.array(
            [r.inp.seed for r in recs], dtype=np.uint64))
        meta.create_dataset("config", data=config_text,
                            dtype=h5py.string_dtype())


def _stack(recs, getter, shape):
    if not recs:
        return np.zeros(shape)
    return np.stack([np.asarray(getter(r)) for r in recs])


def _write_formulation(fdir, fname, recs, network):
    spec = FORMULATIONS[fname]
    n = len(recs)
    shapes = expected_shapes(network, fname, n)

    def collect(kind, keys):
        out = {}
        for key in keys:
            if recs:
                vals = [getattr(r, kind)[fname][key] for r in recs]
                out[key] = np.stack([np.atleast_1d(v) for v in vals])
            else:
                out[key] = np.zeros(shapes[f"{kind}/{key}"])
        return out

    with h5py.File(fdir / "primal.h5", "w") as f:
        _write_arrays(f, collect("primal", spec.primal_keys))
    with h5py.File(fdir / "dual.h5", "w") as f:
        _write_arrays(f, collect("dual", spec.dual_keys))
    with h5py.File(fdir / "meta.h5", "w") as f:
        for key in META_KEYS:
            vals = [r.meta[fname][key] for r in recs]
            if key in STRING_META:
                f.create_dataset(key, shape=(n, 1), dtype=h5py.string_dtype(),
                                 data=np.array(vals, dtype=object).reshape(n, 1)
                                 if n else None)
            elif key == "seed":
                f.create_dataset(key, data=np.array(
                    vals, dtype=np.uint64).reshape(n, 1))
            else:
                f.create_dataset(key, data=np.array(
                    vals, dtype=float).reshape(n, 1))


# ---------------------------------------------------------------------------
# readers and schema checks


def read_h5_arrays(path) -> dict[str, np.ndarray]:
    out = {}
    with h5py.File(path, "r") as f:
        def visit(name, obj):
            if isinstance(obj, h5py.Dataset):
                out[name] = obj[()]
        f.visititems(visit)
    return out


def expected_shapes(network: Network, fname: str, n: int) -> dict[str, tuple]:
    nb, ng, ne = network.n_bus, network.n_gen, network.n_branch
    nl = network.n_load
    dims = {"pg": ng, "qg": ng, "vm": nb, "va": nb, "w": nb,
            "pf": ne, "qf": ne, "pt": ne, "qt": ne, "wr": ne, "wi": ne,
            "slack_bus": 1, "kcl": nb, "kcl_p": nb, "kcl_q": nb,
            "ohm": ne, "ohm_pf": ne, "ohm_qf": ne, "ohm_pt": ne, "ohm_qt": ne,
            "va_diff": ne, "va_diff_lb": ne, "va_diff_ub": ne,
            "w_lb": nb, "w_ub": nb, "vm_lb": nb, "vm_ub": nb}
    for base, dim in (("pg", ng), ("qg", ng), ("pf", ne), ("qf", ne),
                      ("pt", ne), ("qt", ne), ("wr", ne), ("wi", ne)):
        dims[f"{base}_lb"] = dim
        dims[f"{base}_ub"] = dim
    spec = FORMULATIONS[fname]
    shapes = {}
    for key in spec.primal_keys:
        shapes["primal/" + key] = (n, dims[key])
    for key in spec.dual_keys:
        if key in ("sm_fr", "sm_to") and fname == "SOCOPF":
            shapes["dual/" + key] = (n, ne, 3)
        elif key == "jabr":
            shapes["dual/" + key] = (n, ne, 4)
        elif key in ("sm_fr", "sm_to"):
            shapes["dual/" + key] = (n, ne)
        else:
            shapes["dual/" + key] = (n, dims[key])
    for key in META_KEYS:
        shapes["meta/" + key] = (n, 1)
    _ = nl
    return shapes


def validate_layout(root, formulations: list[str] | None = None) -> dict:
    """Check the directory tree and every array shape; returns sample counts
    per split.  Raises :class:`DatasetError` naming the offending key."""
    root = Path(root)
    case_file = root / "case.json"
    if not case_file.exists():
        raise DatasetError(f"missing {case_file}")
    network = read_case_json(case_file)
    formulations = formulations or _detect_formulations(root)
    counts = {}
    for split in SPLITS:
        sdir = root / split
        if not sdir.exists():
            raise DatasetError(f"missing split directory {sdir}")
        inputs = read_h5_arrays(sdir / "input.h5")
        for key in INPUT_KEYS:
            if f"data/{key}" not in inputs:
                raise DatasetError(f"{split}/input.h5 missing data/{key}")
        n = inputs["data/pd"].shape[0]
        dims = {"pd": network.n_load, "qd": network.n_load,
                "branch_status": network.n_branch,
                "gen_status": network.n_gen}
        for key, dim in dims.items():
            got = inputs[f"data/{key}"].shape
            if got != (n, dim):
                raise DatasetError(
                    f"{split}/input.h5 data/{key}: shape {got}, "
                    f"expected {(n, dim)}")
        if "meta/seeds" not in inputs or inputs["meta/seeds"].shape != (n,):
            raise DatasetError(f"{split}/input.h5 meta/seeds missing or misshaped")
        if "meta/config" not in inputs:
            raise DatasetError(f"{split}/input.h5 missing meta/config")
        counts[split] = n
        for fname in formulations:
            fdir = sdir / fname
            arrays = {}
            for part in ("primal", "dual", "meta"):
                fpath = fdir / f"{part}.h5"
                if not fpath.exists():
                    raise DatasetError(f"missing {fpath}")
                for key, val in read_h5_arrays(fpath).items():
                    arrays[f"{part}/{key}"] = val
            for key, shape in expected_shapes(network, fname, n).items():
                if key not in arrays:
                    raise DatasetError(f"{split}/{fname} missing {key}")
                if arrays[key].shape != shape:
                    raise DatasetError(
                        f"{split}/{fname} {key}: shape {arrays[key].shape}, "
                        f"expected {shape}")
    return counts


def _detect_formulations(root) -> list[str]:
    names = []
    train = Path(root) / "train"
    for fname in FORMULATIONS:
        if (train / fname).exists():
            names.append(fname)
    if not names:
        raise DatasetError(f"no formulation directories under {train}")
    return names


def load_split(root, split: str):
    """(network, inputs dict, {formulation: {primal, dual, meta}})."""
    root = Path(root)
    network = read_case_json(root / "case.json")
    inputs = read_h5_arrays(root / split / "input.h5")
    per_form = {}
    for fname in _detect_formulations(root):
        fdir = root / split / fname
        per_form[fname] = {
            "primal": read_h5_arrays(fdir / "primal.h5"),
            "dual": read_h5_arrays(fdir / "dual.h5"),
            "meta": read_h5_arrays(fdir / "meta.h5"),
        }
    return network, inputs, per_form


def instance_from_inputs(inputs: dict, k: int) -> InstanceInput:
    return InstanceInput(
        pd=np.asarray(inputs["data/pd"][k], dtype=float),
        qd=np.asarray(inputs["data/qd"][k], dtype=float),
        branch_status=np.asarray(inputs["data/branch_status"][k], dtype=np.int8),
        gen_status=np.asarray(inputs["data/gen_status"][k], dtype=np.int8),
        seed=int(inputs["meta/seeds"][k]))
