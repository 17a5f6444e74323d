"""Command line interface.

    opfkit generate --config <path>
    opfkit evaluate --data <dir> --pred <file> --formulation <name>
                    [--split test] [--project] [--out prefix]
    opfkit inspect  --data <dir>

Exit codes: 0 success, 1 usage error, 2 runtime error.  Per-sample solver
failures during generation are data (they land in the infeasible split),
not process failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="opfkit",
                     description="OPF dataset generation and benchmarking")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="sample, solve, and write a dataset")
    gen.add_argument("--config", required=True, help="INI configuration file")
    gen.add_argument("--workers", type=int, default=None,
                     help="override the configured worker count")

    ev = sub.add_parser("evaluate", help="score predicted solutions")
    ev.add_argument("--data", required=True, help="dataset directory")
    ev.add_argument("--pred", required=True,
                    help="HDF5 file with predicted primal arrays")
    ev.add_argument("--formulation", required=True,
                    choices=["ACOPF", "DCOPF", "SOCOPF"])
    ev.add_argument("--split", default="test")
    ev.add_argument("--project", action="store_true",
                    help="also compute distance to the feasible set")
    ev.add_argument("--out", default=None,
                    help="write <out>.json and <out>.txt reports")

    ins = sub.add_parser("inspect", help="summarize a dataset")
    ins.add_argument("--data", required=True, help="dataset directory")
    return parser


def cmd_generate(args) -> int:
    from dataclasses import replace

    from .pipeline import generate, load_config

    config = load_config(args.config)
    if args.workers is not None:
        config = replace(config, workers=max(1, args.workers))
    summary = generate(config)
    print(f"case:        {summary['case']}")
    print(f"samples:     {summary['n_samples']}")
    for split, count in summary["splits"].items():
        print(f"  {split:<11}{count}")
    print(f"wall clock:  {summary['wall_clock_s']:.1f} s")
    print(f"processor:   {summary['cpu_hours']:.4f} CPU.hr")
    print(f"output:      {summary['output_dir']}")
    return 0


def cmd_evaluate(args) -> int:
    from .dataset import instance_from_inputs, load_split, read_h5_arrays
    from .formulations import FORMULATIONS
    from .metrics import evaluate_predictions

    network, inputs, per_form = load_split(args.data, args.split)
    if args.formulation not in per_form:
        raise ValueError(f"dataset has no {args.formulation} group")
    spec = FORMULATIONS[args.formulation]
    table = per_form[args.formulation]
    n = inputs["data/pd"].shape[0]

    pred = read_h5_arrays(args.pred)
    for key in spec.primal_keys:
        if key not in pred:
            raise ValueError(f"prediction file is missing key {key!r}")
        want = table["primal"][key].shape
        if pred[key].shape != want:
            raise ValueError(
                f"prediction {key}: shape {pred[key].shape}, expected {want}")

    ref_obj = table["meta"]["primal_objective_value"].ravel()
    report = evaluate_predictions(
        network,
        inputs_of=lambda k: instance_from_inputs(inputs, k),
        points_of=lambda k: {key: pred[key][k] for key in spec.primal_keys},
        ref_objectives=ref_obj[:n],
        formulation=args.formulation,
        project=args.project,
        optimal_points=lambda k: {key: table["primal"][key][k]
                                  for key in spec.primal_keys},
    )
    text = report.to_text()
    if args.out:
        Path(args.out + ".json").write_text(report.to_json(), encoding="utf-8")
        Path(args.out + ".txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_inspect(args) -> int:
    from .dataset import load_split, read_case_json, validate_layout

    counts = validate_layout(args.data)
    network = read_case_json(Path(args.data) / "case.json")
    print(f"case:     {network.name}")
    print(f"buses:    {network.n_bus}   loads: {network.n_load}   "
          f"gens: {network.n_gen}   branches: {network.n_branch}")
    for split, n in counts.items():
        print(f"{split}: {n} samples")
        if n == 0:
            continue
        _, inputs, per_form = load_split(args.data, split)
        pd = inputs["data/pd"]
        print(f"  pd shape {pd.shape}, total demand "
              f"{pd.sum(axis=1).min():.3f}..{pd.sum(axis=1).max():.3f} p.u.")
        for fname, table in per_form.items():
            obj = table["meta"]["primal_objective_value"].ravel()
            dual = table["meta"]["dual_objective_value"].ravel()
            ok = np.isfinite(obj)
            if not ok.any():
                print(f"  {fname}: no solved samples")
                continue
            gap = np.abs(obj[ok] - dual[ok]) / np.maximum(1.0, np.abs(obj[ok]))
            print(f"  {fname}: objective {obj[ok].min():.2f}..{obj[ok].max():.2f}"
                  f"  max relative duality gap {gap.max():.2e}")
    return 0


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "generate":
            return cmd_generate(args)
        if args.command == "evaluate":
            return cmd_evaluate(args)
        if args.command == "inspect":
            return cmd_inspect(args)
        raise ValueError(f"unknown command {args.command!r}")
    except Exception as exc:  # runtime failure -> exit code 2
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
