import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opfkit.network import (Network, NetworkError, branch_admittance,
                            build_incidence, connected)
from conftest import make_graph_net


def admittance_oracle(r, x, b_c, tap, shift):
    """Independent complex-arithmetic evaluation of the two-port blocks."""
    ys = 1.0 / complex(r, x)
    ych = 1j * b_c / 2.0
    yff = (ys + ych) / tap**2
    yft = -ys / (tap * np.exp(-1j * shift))
    ytf = -ys / (tap * np.exp(1j * shift))
    ytt = ys + ych
    return (yff.real, yff.imag, yft.real, yft.imag,
            ytf.real, ytf.imag, ytt.real, ytt.imag)


class TestBranchAdmittance:
    def test_pure_reactance(self):
        got = branch_admittance(0.0, 1.0, 0.0, 1.0, 0.0)
        assert got == pytest.approx((0, -1, 0, 1, 0, 1, 0, -1), abs=1e-15)

    def test_line_with_charging(self):
        gff, bff, gft, bft, gtf, btf, gtt, btt = branch_admittance(
            0.01, 0.1, 0.02, 1.0, 0.0)
        assert gff == pytest.approx(0.9900990099, abs=1e-9)
        assert bff == pytest.approx(-9.8909900990, abs=1e-9)
        assert gft == pytest.approx(-0.9900990099, abs=1e-9)
        assert bft == pytest.approx(9.9009900990, abs=1e-9)

    def test_tap_scaling_law(self):
        base = np.array(branch_admittance(0.01, 0.1, 0.02, 1.0, 0.0))
        doubled = np.array(branch_admittance(0.01, 0.1, 0.02, 2.0, 0.0))
        assert doubled[:2] == pytest.approx(base[:2] / 4.0)
        assert doubled[2:6] == pytest.approx(base[2:6] / 2.0)
        assert doubled[6:] == pytest.approx(base[6:])

    def test_symmetry_without_transformer(self):
        out = branch_admittance(0.03, 0.2, 0.1, 1.0, 0.0)
        assert out[2:4] == pytest.approx(out[4:6])

    def test_lossless_structure(self):
        gff, bff, gft, bft, gtf, btf, gtt, btt = branch_admittance(
            0.0, 0.25, 0.0, 1.0, 0.0)
        assert gff == gtt == 0.0
        assert bft == btf == pytest.approx(-bff)

    def test_zero_impedance_rejected(self):
        with pytest.raises(NetworkError):
            branch_admittance(0.0, 0.0, 0.1, 1.0, 0.0)

    @settings(max_examples=200, deadline=None)
    @given(r=st.floats(0.0, 0.5), x=st.floats(0.01, 1.0),
           b_c=st.floats(0.0, 0.5), tap=st.floats(0.5, 1.5),
           shift=st.floats(-0.5, 0.5))
    def test_matches_complex_oracle(self, r, x, b_c, tap, shift):
        got = branch_admittance(r, x, b_c, tap, shift)
        want = admittance_oracle(r, x, b_c, tap, shift)
        assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


class TestIncidence:
    def test_single_branch_entries(self):
        net = make_graph_net([0], [1], 2)
        a, ag = build_incidence(net)
        assert a.entries() == {(1, 1, 1.0), (1, 2, -1.0)}
        assert ag.entries() == {(1, 1, 1.0)}

    def test_generator_at_second_bus(self):
        net = make_graph_net([0], [1], 2)
        net = Network(**{**{f: getattr(net, f) for f in (
            "name", "base_mva", "ref_bus", "gs", "bs", "vmin", "vmax", "vnom",
            "pgmin", "pgmax", "qgmin", "qgmax", "cost", "load_bus", "pd_ref",
            "qd_ref", "branch_from", "branch_to", "g", "b", "gff", "bff",
            "gft", "bft", "gtf", "btf", "gtt", "btt", "smax", "dva_min",
            "dva_max")}, "gen_bus": np.array([1], dtype=np.int64)})
        _, ag = build_incidence(net)
        assert ag.entries() == {(2, 1, 1.0)}

    def test_row_sums_zero(self, net14):
        a, _ = build_incidence(net14)
        sums = np.zeros(net14.n_branch)
        np.add.at(sums, a.rows - 1, a.values)
        assert np.all(sums == 0.0)

    def test_ieee14_nonzeros(self, net14):
        a, _ = build_incidence(net14)
        assert a.values.size == 40


class TestValidation:
    def test_disconnected_rejected(self):
        with pytest.raises(NetworkError, match="disconnected"):
            make_graph_net([0, 2], [1, 3], 4)

    def test_self_loop_rejected(self):
        with pytest.raises(NetworkError, match="identical endpoints"):
            make_graph_net([0, 1], [1, 1], 2)

    def test_connected_helper(self):
        assert connected(3, np.array([0, 1]), np.array([1, 2]))
        assert not connected(3, np.array([0, 1]), np.array([1, 2]),
                             mask=np.array([True, False]))
