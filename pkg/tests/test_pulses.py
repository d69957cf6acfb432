import math

import numpy as np
import pytest
from scipy.integrate import quad

from isdsim.pulses import PulseEnvelope, TwoColorGate, gaussian_envelope


def test_envelope_zero_at_edges():
    p = PulseEnvelope()
    assert gaussian_envelope(0.0, p) == 0.0
    assert gaussian_envelope(p.t_g, p) == 0.0
    assert gaussian_envelope(-1e-9, p) == 0.0
    assert gaussian_envelope(p.t_g + 1e-9, p) == 0.0


def test_envelope_area_is_pulse_area():
    p = PulseEnvelope()
    area, err = quad(lambda t: gaussian_envelope(t, p), 0.0, p.t_g, limit=200)
    assert abs(area - math.pi / math.sqrt(2.0)) <= 1e-9 * area + err


def test_mean_rabi_frequency():
    # numeric quadrature oracle: area / duration
    p = PulseEnvelope()
    area, _ = quad(lambda t: gaussian_envelope(t, p), 0.0, p.t_g, limit=200)
    assert np.isclose(area / p.t_g, 1.32e6, rtol=0.01)


def test_envelope_nonnegative():
    p = PulseEnvelope()
    t = np.linspace(0.0, p.t_g, 4001)
    assert np.all(gaussian_envelope(t, p) >= 0.0)


def test_envelope_validation():
    with pytest.raises(ValueError):
        PulseEnvelope(t_g=-1e-6)


def test_gate_duration_and_phases():
    g = TwoColorGate.not_gate()
    assert g.duration == 2.0 * g.envelope.t_g
    # NOT gate: theta = pi so the second pulse carries no extra phase
    assert g.pulse_phases(1) == pytest.approx(g.pulse_phases(0))
    g2 = TwoColorGate(theta=0.0)
    p0, p1 = g2.pulse_phases(1)
    assert p0 == pytest.approx(g2.phi0 + math.pi)
    assert p1 == pytest.approx(g2.phi1 + math.pi)
