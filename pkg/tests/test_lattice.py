"""Lattice generation, dipole shifts, frequencies, channels, initial states."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isdsim.holeburning import PopulationProfile
from isdsim.lattice import (
    DIPOLE_K,
    DopedIon,
    assign_frequencies,
    assign_initial_states,
    channel_index,
    dipole_shift,
    dope_sphere,
    gamma_inh,
    load_unit_cell,
    trial_rng,
)

MU = 7.6e-32


@pytest.fixture(scope="module")
def cell():
    return load_unit_cell()


def _ion(pos, mu):
    return DopedIon(np.asarray(pos, dtype=float), np.asarray(mu, dtype=float))


class TestDipoleShift:
    def test_parallel_alignment(self):
        # independent scalar evaluation: k |mu|^2 / r^3 * (1 - 3) at 5 nm
        a = _ion([0, 0, 0], [MU, 0, 0])
        b = _ion([5.0, 0, 0], [MU, 0, 0])
        oracle = DIPOLE_K * MU * MU / (5e-9) ** 3 * (1.0 - 3.0)
        assert dipole_shift(a, b) == pytest.approx(oracle, rel=1e-12)
        assert oracle == pytest.approx(-2.1e6, rel=0.03)

    def test_perpendicular_pair(self):
        a = _ion([0, 0, 0], [MU, 0, 0])
        b = _ion([0, 0, 5.0], [MU, 0, 0])
        oracle = DIPOLE_K * MU * MU / (5e-9) ** 3
        assert dipole_shift(a, b) == pytest.approx(oracle, rel=1e-12)
        assert oracle == pytest.approx(1.07e6, rel=0.03)

    def test_orthogonal_vanishes(self):
        a = _ion([0, 0, 0], [MU, 0, 0])
        b = _ion([5.0, 0, 0], [0, MU, 0])
        assert dipole_shift(a, b) == 0.0

    def test_symmetry(self):
        rng = np.random.default_rng(0)
        a = _ion(rng.normal(size=3), rng.normal(size=3) * MU)
        b = _ion(rng.normal(size=3) + 4.0, rng.normal(size=3) * MU)
        assert dipole_shift(a, b) == dipole_shift(b, a)

    def test_inverse_cube_scaling(self):
        a = _ion([0, 0, 0], [MU, MU, 0])
        b1 = _ion([3.0, 1.0, 2.0], [0, MU, MU])
        b2 = _ion([6.0, 2.0, 4.0], [0, MU, MU])
        assert dipole_shift(a, b1) == pytest.approx(8.0 * dipole_shift(a, b2), rel=1e-12)

    def test_coincident_positions_rejected(self):
        a = _ion([1, 2, 3], [MU, 0, 0])
        with pytest.raises(ValueError):
            dipole_shift(a, a)


class TestUnitCell:
    def test_orientation_classes_preserve_norm(self, cell):
        dirs = cell.dipole_directions()
        assert dirs.shape == (4, 3)
        assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)

    def test_sixteen_sites_per_cell(self, cell):
        fr, oc, sc = cell.site_positions()
        assert len(fr) == 16
        assert (sc == 1).sum() == 8
        assert sorted(np.bincount(oc)) == [4, 4, 4, 4]


class TestDoping:
    def test_zero_concentration(self, cell):
        s = dope_sphere(cell, 0.0, radius=12.0, seed=0)
        assert s.n_ions == 0
        assert s.shifts_to_qubit.size == 0

    def test_binomial_count(self, cell):
        # count oracle: direct lattice enumeration x concentration
        from isdsim.lattice import _SiteTable

        table = _SiteTable.get(cell, 15.0)
        c = 0.02
        counts = [dope_sphere(cell, c, radius=15.0, seed=k).n_ions for k in range(20)]
        mean = np.mean(counts)
        expect = table.n_site1 * c
        sigma = math.sqrt(table.n_site1 * c * (1 - c))
        assert abs(mean - expect) < 4 * sigma / math.sqrt(20)

    def test_determinism(self, cell):
        s1 = dope_sphere(cell, 0.01, radius=15.0, seed=42)
        s2 = dope_sphere(cell, 0.01, radius=15.0, seed=42)
        assert np.array_equal(s1.positions, s2.positions)
        assert np.array_equal(s1.shifts_to_qubit, s2.shifts_to_qubit)
        assert s1.site2_count == s2.site2_count

    def test_qubit_near_center_and_not_doped(self, cell):
        s = dope_sphere(cell, 0.01, radius=15.0, seed=3)
        assert np.linalg.norm(s.qubit_position) < 1.0
        d = np.linalg.norm(s.positions - s.qubit_position[None, :], axis=1)
        assert d.min() > 1e-9

    def test_ions_inside_sphere(self, cell):
        s = dope_sphere(cell, 0.01, radius=15.0, seed=4)
        assert np.all(np.linalg.norm(s.positions, axis=1) <= 15.0 + 1e-9)

    def test_concentration_validated(self, cell):
        with pytest.raises(ValueError):
            dope_sphere(cell, 0.2, radius=10.0)


class TestFrequencies:
    def test_gamma_values(self):
        assert gamma_inh(0.01) == pytest.approx(19.8e9)
        assert gamma_inh(0.05) == pytest.approx(91.8e9)

    def test_median_detuning(self, cell):
        s = dope_sphere(cell, 0.02, radius=25.0, seed=5)
        assign_frequencies(s, seed=6)
        med = np.median(np.abs(s.detunings))
        assert med == pytest.approx(s.gamma_inh / 2, rel=0.05)


class TestChannels:
    def test_documented_examples(self):
        assert channel_index(2.4e9)[0] == 3
        assert channel_index(0.0)[0] == 0
        assert channel_index(-0.4e9)[0] == 2

    def test_in_channel_detuning(self):
        q, d = channel_index(2.4e9)
        assert d == pytest.approx(0.4e9)
        q, d = channel_index(-0.4e9)
        assert d == pytest.approx(0.6e9)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(-40e9, 40e9, allow_nan=False))
    def test_partition_property(self, d):
        q, delta = channel_index(d)
        assert q >= 0
        assert -335e6 - 1e-3 <= delta < 665e6 + 1e-3
        # the mapping is a partition: reconstructing the detuning is exact
        k = (q + 1) // 2 if q % 2 else -(q // 2)
        assert d == pytest.approx(k * 1e9 + delta, abs=1e-3)


class TestInitialStates:
    def test_uniform_without_windows(self, cell):
        s = dope_sphere(cell, 0.02, radius=25.0, seed=7)
        assign_frequencies(s, seed=8)
        assign_initial_states(s, None, seed=9)
        counts = np.bincount(s.initial_states, minlength=3)
        assert counts.sum() == s.n_ions
        p = counts / s.n_ions
        sigma = math.sqrt((1 / 3) * (2 / 3) / s.n_ions)
        assert np.all(np.abs(p - 1 / 3) < 5 * sigma)

    def test_windowed_states_follow_profile(self, cell):
        # profile that forces ground state 1 everywhere
        grid = np.linspace(-335e6, 665e6, 101)
        pops = np.zeros((101, 6))
        pops[:, 1] = 1.0
        prof = PopulationProfile(grid, pops)
        s = dope_sphere(cell, 0.01, radius=20.0, seed=10)
        assign_frequencies(s, seed=11)
        assign_initial_states(s, prof, seed=12)
        assert np.all(s.initial_states == 1)

    def test_windows_require_frequencies(self, cell):
        grid = np.linspace(-335e6, 665e6, 11)
        pops = np.tile(np.array([1 / 3, 1 / 3, 1 / 3, 0, 0, 0]), (11, 1))
        prof = PopulationProfile(grid, pops)
        s = dope_sphere(cell, 0.01, radius=15.0, seed=13)
        with pytest.raises(ValueError):
            assign_initial_states(s, prof, seed=14)


def test_trial_rng_streams_independent():
    a = trial_rng(1, 0).random(5)
    b = trial_rng(1, 1).random(5)
    c = trial_rng(1, 0).random(5)
    assert np.array_equal(a, c)
    assert not np.array_equal(a, b)


class TestSurroundingIO:
    def test_roundtrip_replay(self, cell, tmp_path):
        s = dope_sphere(cell, 0.01, radius=12.0, seed=77)
        assign_frequencies(s, seed=78)
        assign_initial_states(s, None, seed=79)
        path = tmp_path / "surrounding.csv"
        s.save(path)
        back = type(s).load(path)
        assert back.n_ions == s.n_ions
        assert np.allclose(back.positions, s.positions)
        assert np.allclose(back.shifts_to_qubit, s.shifts_to_qubit)
        assert np.allclose(back.detunings, s.detunings)
        assert np.array_equal(back.channels, s.channels)
        assert np.array_equal(back.initial_states, s.initial_states)
        assert np.allclose(back.in_channel_detunings, s.in_channel_detunings)
        assert back.site2_count == s.site2_count
