"""Transfer probabilities, pulse application, the burn scheme and windows."""

import numpy as np
import pytest

from isdsim.holeburning import (
    BurnPulse,
    PopulationProfile,
    absorption_spectrum,
    apply_pulse,
    compute_max_windows,
    decay_step,
    default_pulses,
    make_grid,
    run_scheme,
    transfer_probability,
    transition_offsets,
)


@pytest.fixture(scope="module")
def pulses(scheme):
    return default_pulses(scheme, nu_init=100e3)


class TestTransferProbability:
    def test_design_center_efficiency(self, scheme, pulses):
        p1 = pulses[0]
        nu = p1.nu_c
        assert transfer_probability(nu, p1, p1.design_transition, scheme) == pytest.approx(0.60, abs=1e-6)

    def test_lorentzian_tail(self, scheme, pulses):
        p1 = pulses[0]
        nu = p1.nu_c + 200e6
        val = transfer_probability(nu, p1, p1.design_transition, scheme)
        gamma = 1 / 2.6e-3
        assert val == pytest.approx(0.6 * gamma**2 / (200e6) ** 2, rel=1e-3)
        assert val < 1e-9

    def test_efficiency_scaling_and_cap(self, scheme):
        # a transition with 4x the design strength doubles the efficiency
        f = scheme.rel_osc_strength
        pulse = BurnPulse(0.0, 1e6, 100e3, (1, 2), 0.4)  # design f = 0.39
        strong = (1, 1)  # f = 0.60
        expect = 0.4 * np.sqrt(f[strong] / f[1, 2])
        assert transfer_probability(0.0, pulse, strong, scheme) == pytest.approx(expect, rel=1e-9)
        pulse_hi = BurnPulse(0.0, 1e6, 100e3, (2, 1), 0.6)  # design f = 0.02
        capped = transfer_probability(0.0, pulse_hi, (2, 0), scheme)  # f = 0.93
        assert capped == pytest.approx(1.0, abs=1e-9)

    def test_unknown_transition(self, scheme, pulses):
        with pytest.raises(ValueError):
            transfer_probability(0.0, pulses[0], (3, 0), scheme)


def _uniform_profile(n=51):
    grid = np.linspace(-335e6, 665e6, n)
    pops = np.zeros((n, 6))
    pops[:, :3] = 1.0 / 3.0
    return PopulationProfile(grid, pops)


class TestApplyPulse:
    def test_full_transfer_in_scan(self, scheme):
        # efficiency-1 pulse empties the design ground state at the plateau
        offs = transition_offsets(scheme)
        pulse = BurnPulse(0.0, 2e6, 10e3, (0, 2), 0.9999995)
        grid = np.array([-offs[0, 2]])  # ion whose (0, e) transition sits at 0
        pops = np.zeros((1, 6))
        pops[0, 0] = 1.0
        prof = PopulationProfile(grid, pops)
        out = apply_pulse(prof, pulse, scheme)
        assert out.pops[0, 0] < 1e-6
        assert out.pops[0, 3 + 2] > 1.0 - 1e-6

    def test_zero_population_unchanged(self, scheme):
        prof = _uniform_profile()
        prof.pops[:, 0] = 0.0
        prof.pops[:, 1] = 2 / 3.0
        out = apply_pulse(prof, BurnPulse(1e9, 1e6, 100e3, (0, 2), 0.6), scheme)
        assert np.allclose(out.pops[:, 0], 0.0, atol=1e-12)

    def test_population_conserved(self, scheme, pulses):
        prof = _uniform_profile()
        out = apply_pulse(prof, pulses[1], scheme)
        assert np.allclose(out.pops.sum(axis=1), 1.0, atol=1e-9)
        out = decay_step(out, scheme)
        assert np.allclose(out.pops.sum(axis=1), 1.0, atol=1e-9)
        assert np.allclose(out.pops[:, 3:], 0.0)


class TestScheme:
    @pytest.fixture(scope="class")
    def burnt(self, scheme):
        grid = make_grid(0.0, base_step=200e3)
        return run_scheme(scheme, nu_init=0.0, grid=grid)

    def test_windows_emptied(self, scheme, burnt):
        f0 = np.linspace(-8e6, 8e6, 81)
        f1 = np.linspace(56e6, 103e6, 161)
        assert absorption_spectrum(burnt, f0, scheme).max() < 1e-3
        assert absorption_spectrum(burnt, f1, scheme).max() < 1e-3

    def test_qubit_initialized(self, burnt):
        final = [float(v) for v in burnt.meta["qubit_final"].split(",")]
        assert final[0] > 0.99  # |0> is ground index 0

    def test_periodicity_contract(self, burnt):
        d = np.array([12.5e6, -100e6, 400e6])
        a = burnt.ground_probabilities(d)
        b = burnt.ground_probabilities(d + 1e9)
        c = burnt.ground_probabilities(d - 3e9)
        assert np.allclose(a, b)
        assert np.allclose(a, c)

    def test_more_clear_reps_never_increase_window_absorption(self, scheme):
        grid = make_grid(0.0, base_step=500e3)
        goals_a = [((0, 1, 2), 3, True), ((0, 1), 10, True)]
        goals_b = [((0, 1, 2), 3, True), ((0, 1), 20, True)]
        pa = run_scheme(scheme, 0.0, grid=grid, goals=goals_a)
        pb = run_scheme(scheme, 0.0, grid=grid, goals=goals_b)
        f = np.linspace(-8e6, 8e6, 41)
        aa = absorption_spectrum(pa, f, scheme)
        ab = absorption_spectrum(pb, f, scheme)
        assert np.all(ab <= aa + 1e-12)

    def test_ensemble_peak_with_wide_init(self, scheme):
        grid = make_grid(100e3, base_step=200e3, fine_step=10e3)
        prof = run_scheme(scheme, nu_init=100e3, grid=grid)
        # nonzero |0> population appears in a ~100 kHz band at the qubit
        band = prof.ground_probabilities(np.linspace(-40e3, 40e3, 11))
        assert band[:, 0].max() > 0.2
        away = prof.ground_probabilities(np.linspace(2e6, 6e6, 11))
        assert away[:, 0].max() < 1e-3

    def test_negative_nu_init_rejected(self, scheme):
        with pytest.raises(ValueError):
            run_scheme(scheme, nu_init=-1.0, grid=make_grid(0.0, base_step=1e6))


class TestMaxWindows:
    def test_published_values(self, scheme):
        (w0l, w0h), (w1l, w1h) = compute_max_windows(scheme, step=5e3)
        assert abs(w0l - (-9.0e6)) <= 0.1e6 + 1e3
        assert abs(w0h - 9.1e6) <= 0.1e6 + 1e3
        assert abs(w1l - (-35.9e6)) <= 0.1e6 + 1e3
        assert abs(w1h - 14.6e6) <= 0.1e6 + 1e3

    def test_scan_regions_sit_inside(self, scheme):
        # the burn scan regions are ~1 MHz narrower than the maximal windows
        (w0l, w0h), (w1l, w1h) = compute_max_windows(scheme, step=5e3)
        pulses = default_pulses(scheme, 0.0)
        q1 = scheme.transition_offset(scheme.role_one, scheme.role_e)
        assert w0l < pulses[0].nu_c - pulses[0].nu_scan / 2
        assert pulses[0].nu_c + pulses[0].nu_scan / 2 < w0h
        assert w1l < (pulses[1].nu_c - pulses[1].nu_scan / 2) - q1
        assert (pulses[1].nu_c + pulses[1].nu_scan / 2) - q1 < w1h


class TestProfileIO:
    def test_roundtrip(self, tmp_path, scheme):
        grid = make_grid(0.0, base_step=5e6)
        prof = run_scheme(scheme, 0.0, grid=grid, goals=[((0, 1), 2, True)])
        path = tmp_path / "prof.csv"
        prof.save(path)
        back = PopulationProfile.load(path)
        assert np.allclose(back.grid, prof.grid)
        norm = prof.pops[:, :3] / prof.pops[:, :3].sum(axis=1, keepdims=True)
        assert np.allclose(back.pops[:, :3], norm, atol=1e-10)
