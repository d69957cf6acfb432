"""Closed-form predictions for resonant ions with small shifts.

Valid when every non-qubit ion is resonant with the qubit and the shifts are
small against the pulse bandwidth: the pulses then excite and deexcite all
bright components perfectly and the interaction only contributes a phase
accumulated in the doubly excited states during an effective dwell time t_e.
t_e is always a fitted quantity here (it is close to, but not equal to, the
pulse duration and depends on the other gate parameters).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

__all__ = [
    "TheoryConfig",
    "bright_dark_amplitudes",
    "fit_te",
    "theory_bloch",
    "theory_error_one_ion",
]

MAX_IONS = 12  # 2^N configurations; this module exists for validation only


def theory_error_one_ion(delta_nu, t_e):
    """Gate error from one resonant ion: 1/4 - cos(2 pi t_e delta_nu)/4."""
    delta_nu = np.asarray(delta_nu, dtype=float)
    out = 0.25 - 0.25 * np.cos(2.0 * math.pi * t_e * delta_nu)
    return float(out) if out.ndim == 0 else out


def bright_dark_amplitudes(state01: np.ndarray, phi: float) -> tuple[complex, complex]:
    """(B, D) amplitudes of a qubit-space state for relative drive phase phi."""
    b = np.array([1.0, np.exp(-1j * phi)]) / math.sqrt(2.0)
    d = np.array([1.0, -np.exp(-1j * phi)]) / math.sqrt(2.0)
    return complex(np.vdot(b, state01)), complex(np.vdot(d, state01))


@dataclass
class TheoryConfig:
    """Inputs of the 2^N bright/dark sum.

    ``shifts`` is the symmetric (N+1)x(N+1) table including the qubit at index
    0 (only the qubit rows enter the reduced phase).  ``amp_b``/``amp_d`` hold
    per-ion bright/dark amplitudes, qubit first; product initial states are
    expanded on the fly.
    """

    t_e: float
    shifts: np.ndarray
    amp_b: np.ndarray
    amp_d: np.ndarray
    phi: float = math.pi
    theta: float = math.pi

    def __post_init__(self):
        self.shifts = np.asarray(self.shifts, dtype=float)
        self.amp_b = np.asarray(self.amp_b, dtype=complex)
        self.amp_d = np.asarray(self.amp_d, dtype=complex)
        n1 = self.amp_b.size
        if self.shifts.shape != (n1, n1):
            raise ValueError("shift table must be (N+1)x(N+1) including the qubit")
        if not np.allclose(self.shifts, self.shifts.T):
            raise ValueError("shift table must be symmetric")
        norms = np.abs(self.amp_b) ** 2 + np.abs(self.amp_d) ** 2
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("per-ion amplitudes must be normalized")
        if n1 - 1 > MAX_IONS:
            raise ValueError(f"more than {MAX_IONS} ions in the 2^N sum")

    @staticmethod
    def uniform(
        t_e: float,
        shifts: np.ndarray,
        state01=None,
        phi: float = math.pi,
        theta: float = math.pi,
    ) -> "TheoryConfig":
        """All ions (qubit included) start in the same qubit-space state."""
        shifts = np.asarray(shifts, dtype=float)
        n1 = shifts.shape[0]
        if state01 is None:
            state01 = np.array([1.0, 1j]) / math.sqrt(2.0)
        b, d = bright_dark_amplitudes(np.asarray(state01, dtype=complex), phi)
        return TheoryConfig(
            t_e, shifts, np.full(n1, b, dtype=complex), np.full(n1, d, dtype=complex),
            phi, theta,
        )


def theory_bloch(config: TheoryConfig) -> np.ndarray:
    """Qubit Bloch vector after the gate, summed over 2^N ion configurations."""
    n = config.amp_b.size - 1
    phi, theta = config.phi, config.theta
    u = v = w = 0.0
    qb, qd = config.amp_b[0], config.amp_d[0]
    ion_b = config.amp_b[1:]
    ion_d = config.amp_d[1:]
    shifts0 = config.shifts[0, 1:]
    for s in range(1 << n):
        bits = np.array([(s >> j) & 1 for j in range(n)], dtype=bool)
        ion_amp = np.prod(np.where(bits, ion_b, ion_d))
        a_bs = qb * ion_amp
        a_ds = qd * ion_amp
        beta = theta - 2.0 * math.pi * config.t_e * float(shifts0[bits].sum())
        xi = a_bs * np.conj(a_ds) * np.exp(1j * beta)
        pb = abs(a_bs) ** 2 - abs(a_ds) ** 2
        u += math.cos(phi) * pb + 2.0 * math.sin(phi) * xi.imag
        v += -math.sin(phi) * pb + 2.0 * math.cos(phi) * xi.imag
        w += 2.0 * xi.real
    return np.array([u, v, w])


def fit_te(data, initial_guess: float = 1.5e-6):
    """Least-squares fit of the one-ion error law over t_e.

    ``data`` is a sequence of (delta_nu, error) pairs inside the small-shift
    validity window.  Returns (t_e, rms_residual).
    """
    data = np.asarray(data, dtype=float)
    dnu, err = data[:, 0], data[:, 1]
    if np.allclose(err, 0.0):
        raise ValueError("degenerate fit: all errors are zero")

    def resid(p):
        return theory_error_one_ion(dnu, p[0]) - err

    sol = least_squares(resid, x0=[initial_guess], method="lm")
    if not sol.success:
        raise RuntimeError(f"t_e fit did not converge: {sol.message}")
    rms = float(np.sqrt(np.mean(sol.fun**2)))
    return float(sol.x[0]), rms
