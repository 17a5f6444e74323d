import json

import numpy as np
import pytest

from opfkit.dataset import (DatasetError, case_payload, read_case_json,
                            split_dataset, validate_layout, write_case_json)
from opfkit.pipeline import GenerationConfig, generate
from conftest import DATA


class TestCaseJson:
    def test_two_bus_payload(self, dc_toy):
        payload = case_payload(dc_toy)
        assert payload["N"] == 2 and payload["E"] == 1
        assert payload["L"] == 1 and payload["G"] == 1
        assert payload["bus_fr"] == [1] and payload["bus_to"] == [2]
        assert payload["ref_bus"] == 1
        a = payload["A"]
        entries = set(zip(a["rows"], a["cols"], a["values"]))
        assert entries == {(1, 1, 1.0), (1, 2, -1.0)}

    def test_ieee14_counts(self, net14):
        payload = case_payload(net14)
        assert payload["L"] == 11 and payload["G"] == 5
        assert len(payload["smax"]) == 20

    def test_round_trip(self, net14, tmp_path):
        path = tmp_path / "case.json"
        write_case_json(net14, path)
        again = read_case_json(path)
        for field in ("gs", "bs", "vmin", "vmax", "pd_ref", "qd_ref",
                      "pgmin", "pgmax", "qgmin", "qgmax", "cost",
                      "gff", "bff", "gft", "bft", "gtf", "btf", "gtt", "btt",
                      "smax", "dva_min", "dva_max", "g", "b", "vnom"):
            np.testing.assert_allclose(getattr(again, field),
                                       getattr(net14, field),
                                       rtol=1e-12, atol=1e-15, err_msg=field)
        assert again.ref_bus == net14.ref_bus
        assert np.array_equal(again.gen_bus, net14.gen_bus)
        assert np.array_equal(again.load_bus, net14.load_bus)
        assert np.array_equal(again.branch_from, net14.branch_from)
        assert np.array_equal(again.branch_to, net14.branch_to)

    def test_indices_one_based_in_file(self, dc_toy, tmp_path):
        path = tmp_path / "case.json"
        write_case_json(dc_toy, path)
        with open(path) as f:
            raw = json.load(f)
        assert min(raw["gen_bus"]) >= 1
        assert min(raw["load_bus"]) >= 1


class TestSplit:
    def test_80_20(self):
        flags = [True] * 10 + [False] * 2
        splits = split_dataset(flags)
        assert len(splits["train"]) == 8
        assert len(splits["test"]) == 2
        assert splits["infeasible"] == [10, 11]

    def test_zero_feasible(self):
        splits = split_dataset([False] * 4)
        assert splits["train"] == [] and splits["test"] == []
        assert splits["infeasible"] == [0, 1, 2, 3]

    def test_deterministic(self):
        flags = [True] * 37 + [False] * 3
        assert split_dataset(flags) == split_dataset(flags)

    def test_partition(self):
        rng = np.random.default_rng(1)
        flags = list(rng.random(25) > 0.3)
        splits = split_dataset(flags)
        all_idx = sorted(splits["train"] + splits["test"] + splits["infeasible"])
        assert all_idx == list(range(25))

    def test_floor_rule(self):
        splits = split_dataset([True] * 7)
        assert len(splits["train"]) == 5     # floor(0.8 * 7)
        assert len(splits["test"]) == 2


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds") / "out"
    config = GenerationConfig(
        case_file=str(DATA / "case14_ieee.m"), case_name="14_ieee",
        linearize_costs=True, b_l=0.8, b_u=1.0, eps=0.1,
        n_samples=3, base_seed=5, workers=1, output_dir=str(out),
        raw_text="[case]\nx = 1\n")
    summary = generate(config)
    return out, summary


class TestWrittenLayout:
    def test_validates_and_counts(self, small_dataset):
        out, summary = small_dataset
        counts = validate_layout(out)
        assert sum(counts.values()) == 3
        assert summary["splits"] == {k: v for k, v in zip(
            ("train", "test", "infeasible"),
            (counts["train"], counts["test"], counts["infeasible"]))}

    def test_array_shapes(self, small_dataset):
        import h5py

        out, _ = small_dataset
        counts = validate_layout(out)
        n = counts["train"]
        with h5py.File(out / "train" / "input.h5") as f:
            assert f["data/pd"].shape == (n, 11)
            assert f["meta/seeds"].shape == (n,)
            assert "x = 1" in f["meta/config"][()].decode()
        with h5py.File(out / "train" / "SOCOPF" / "dual.h5") as f:
            assert f["jabr"].shape == (n, 20, 4)
            assert f["sm_fr"].shape == (n, 20, 3)
        with h5py.File(out / "train" / "ACOPF" / "meta.h5") as f:
            assert f["formulation"].shape == (n, 1)
            assert f["seed"].shape == (n, 1)

    def test_seed_alignment(self, small_dataset):
        import h5py

        out, _ = small_dataset
        for split in ("train", "test"):
            with h5py.File(out / split / "input.h5") as f:
                seeds = f["meta/seeds"][()]
            with h5py.File(out / split / "DCOPF" / "meta.h5") as f:
                assert np.array_equal(f["seed"][()].ravel(), seeds)

    def test_corruption_detected(self, small_dataset, tmp_path):
        import h5py
        import shutil

        out, _ = small_dataset
        broken = tmp_path / "broken"
        shutil.copytree(out, broken)
        path = broken / "train" / "SOCOPF" / "dual.h5"
        with h5py.File(path, "r+") as f:
            data = f["jabr"][()]
            del f["jabr"]
            f.create_dataset("jabr", data=data[:, :, :3])
        with pytest.raises(DatasetError, match="jabr"):
            validate_layout(broken)

    def test_read_back_equals_written(self, small_dataset):
        import h5py

        out, _ = small_dataset
        from opfkit.dataset import read_h5_arrays

        arrays = read_h5_arrays(out / "train" / "ACOPF" / "primal.h5")
        with h5py.File(out / "train" / "ACOPF" / "primal.h5") as f:
            for key in arrays:
                np.testing.assert_array_equal(arrays[key], f[key][()])


class TestEmptyDataset:
    def test_zero_samples(self, tmp_path):
        out = tmp_path / "empty"
        config = GenerationConfig(
            case_file=str(DATA / "case14_ieee.m"), linearize_costs=True,
            n_samples=0, workers=1, output_dir=str(out))
        summary = generate(config)
        assert summary["n_samples"] == 0
        counts = validate_layout(out)
        assert counts == {"train": 0, "test": 0, "infeasible": 0}


class TestMetaColumns:
    def test_statuses_and_times(self, small_dataset):
        import h5py

        out, _ = small_dataset
        allowed = {"optimal", "locally-optimal", "infeasible-or-unbounded",
                   "iteration-limit", "numerical-failure"}
        for split in ("train", "test"):
            for fname in ("DCOPF", "SOCOPF", "ACOPF"):
                with h5py.File(out / split / fname / "meta.h5") as f:
                    statuses = [s[0].decode() for s in f["termination_status"][()]]
                    assert set(statuses) <= allowed
                    for key in ("solve_time", "build_time", "extract_time"):
                        assert np.all(f[key][()] >= 0.0)
                    forms = [s[0].decode() for s in f["formulation"][()]]
                    assert set(forms) == {fname} or not forms
