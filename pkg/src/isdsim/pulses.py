"""Gate pulse envelope and the two-color gate description.

A single-qubit gate is 2 two-color pulses.  Each pulse has a cut Gaussian Rabi
envelope that starts and ends at exactly zero; the second pulse carries an
additional phase of pi - theta on both colors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = ["PulseEnvelope", "TwoColorGate", "gaussian_envelope"]


@dataclass(frozen=True)
class PulseEnvelope:
    """Cut Gaussian envelope Omega(t) = C1 exp(-(t - t_g/2)^2 / (2 sigma^2)) - C2.

    C2 forces Omega(0) = Omega(t_g) = 0 and C1 is fixed so the time integral
    over [0, t_g] equals ``area`` (rad).  Default values give the pi/sqrt(2)
    pulse area used for the NOT gate.
    """

    t_g: float = 1.68e-6
    sigma: float = 4.16e-6
    area: float = math.pi / math.sqrt(2.0)
    c1: float = field(init=False)
    c2: float = field(init=False)

    def __post_init__(self):
        if self.t_g <= 0 or self.sigma <= 0:
            raise ValueError("t_g and sigma must be positive")
        edge = math.exp(-self.t_g**2 / (8.0 * self.sigma**2))
        # integral of the Gaussian part over [0, t_g] for C1 = 1
        gauss_int = (
            self.sigma
            * math.sqrt(2.0 * math.pi)
            * math.erf(self.t_g / (2.0 * math.sqrt(2.0) * self.sigma))
        )
        c1 = self.area / (gauss_int - edge * self.t_g)
        object.__setattr__(self, "c1", c1)
        object.__setattr__(self, "c2", c1 * edge)

    @property
    def peak(self) -> float:
        return self.c1 - self.c2


def gaussian_envelope(t, p: PulseEnvelope):
    """Rabi amplitude (rad/s) at time ``t`` within [0, t_g]; 0 outside.

    Accepts scalars or numpy arrays.
    """
    import numpy as np

    t = np.asarray(t, dtype=float)
    inside = (t >= 0.0) & (t <= p.t_g)
    val = p.c1 * np.exp(-((t - 0.5 * p.t_g) ** 2) / (2.0 * p.sigma**2)) - p.c2
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TwoColorGate:
    """Phases and envelope of a 2-pulse two-color gate.

    ``phi0``/``phi1`` are the color phases of the first pulse; the second pulse
    uses phi + pi - theta on both colors.  The relative phase phi1 - phi0
    selects the bright/dark basis, theta is the gate phase picked up by the
    bright state.  A NOT gate is phi1 - phi0 = pi, theta = pi.
    """

    phi0: float = 0.0
    phi1: float = math.pi
    theta: float = math.pi
    envelope: PulseEnvelope = field(default_factory=PulseEnvelope)

    @property
    def duration(self) -> float:
        """Total gate duration: two pulses back to back."""
        return 2.0 * self.envelope.t_g

    def pulse_phases(self, pulse_index: int) -> tuple[float, float]:
        """(phi0, phi1) of pulse 0 or 1 of the gate."""
        if pulse_index == 0:
            return self.phi0, self.phi1
        shift = math.pi - self.theta
        return self.phi0 + shift, self.phi1 + shift

    @staticmethod
    def not_gate(envelope: PulseEnvelope | None = None) -> "TwoColorGate":
        return TwoColorGate(envelope=envelope or PulseEnvelope())
