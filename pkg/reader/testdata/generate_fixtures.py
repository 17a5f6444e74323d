"""Regenerate the reader's committed test fixtures from the primary toolkit.

Run from the repository root:  python3 reader/testdata/generate_fixtures.py
"""

import json
import shutil
from pathlib import Path

import h5py
import numpy as np

from opfkit.dataset import (instance_from_inputs, load_split, write_dataset)
from opfkit.formulations import FORMULATIONS, evaluate_residuals, reference_instance
from opfkit.network import Network
from opfkit.pipeline import GenerationConfig, generate, solve_sample

HERE = Path(__file__).parent
ROOT = HERE.parent.parent


def build_ds14():
    out = HERE / "ds14"
    if out.exists():
        shutil.rmtree(out)
    config = GenerationConfig(
        case_file=str(ROOT / "tests/data/case14_ieee.m"), case_name="14_ieee",
        linearize_costs=True, b_l=0.7, b_u=1.1, eps=0.2,
        n_samples=8, base_seed=404, workers=1, output_dir=str(out),
        raw_text="[sampler]\nsamples = 8\nbase_seed = 404\n")
    summary = generate(config)
    print("ds14:", summary["splits"])
    return out


def build_toy():
    """2-bus toy (cost 5, pd 1.0, b=-10): lambda_2 = 5 at the optimum."""
    out = HERE / "ds2bus"
    if out.exists():
        shutil.rmtree(out)
    ne = 1
    net = Network(
        name="toy2", base_mva=100.0, ref_bus=0,
        gs=np.zeros(2), bs=np.zeros(2),
        vmin=np.full(2, 0.9), vmax=np.full(2, 1.1), vnom=np.full(2, 135.0),
        gen_bus=np.array([0], dtype=np.int64),
        pgmin=np.zeros(1), pgmax=np.full(1, 2.0),
        qgmin=np.full(1, -2.0), qgmax=np.full(1, 2.0), cost=np.array([5.0]),
        load_bus=np.array([1], dtype=np.int64),
        pd_ref=np.array([1.0]), qd_ref=np.array([0.0]),
        branch_from=np.array([0], dtype=np.int64),
        branch_to=np.array([1], dtype=np.int64),
        g=np.zeros(ne), b=np.full(ne, -10.0),
        gff=np.zeros(ne), bff=np.full(ne, -10.0),
        gft=np.zeros(ne), bft=np.full(ne, 10.0),
        gtf=np.zeros(ne), btf=np.full(ne, 10.0),
        gtt=np.zeros(ne), btt=np.full(ne, -10.0),
        smax=np.full(ne, 2.0),
        dva_min=np.full(ne, -np.pi / 3), dva_max=np.full(ne, np.pi / 3))
    records = [solve_sample(net, reference_instance(net), 0, ("DCOPF",))]
    write_dataset(out, net, records, ["DCOPF"], "[sampler]\ntoy = 1\n")
    print("ds2bus written")
    return out


def write_residual_report(root):
    """Per-instance DC residual vectors computed by the primary."""
    report = {}
    for split in ("train", "test"):
        network, inputs, per_form = load_split(root, split)
        table = per_form["DCOPF"]
        n = inputs["data/pd"].shape[0]
        rows = []
        for k in range(n):
            inp = instance_from_inputs(inputs, k)
            point = {key: table["primal"][key][k]
                     for key in FORMULATIONS["DCOPF"].primal_keys}
            rep = evaluate_residuals("dc", network, inp, point)
            rows.append({"kcl": rep.groups["kcl"].tolist(),
                         "ohm": rep.groups["ohm"].tolist()})
        report[split] = rows
    path = HERE / "primary_dc_residuals.json"
    path.write_text(json.dumps(report, indent=1))
    print("residual report written")


def build_corrupted(root):
    out = HERE / "ds14_corrupt"
    if out.exists():
        shutil.rmtree(out)
    shutil.copytree(root, out)
    path = out / "train" / "SOCOPF" / "dual.h5"
    with h5py.File(path, "r+") as f:
        data = f["jabr"][()]
        del f["jabr"]
        f.create_dataset("jabr", data=data[:, :, :3])
    print("corrupted copy written")


if __name__ == "__main__":
    root = build_ds14()
    write_residual_report(root)
    build_corrupted(root)
    build_toy()
