"""Shared structures for the propagation kernels.

The kernels integrate in the interaction picture of the static atomic
Hamiltonian: every drive term carries its own oscillation frequency
(laser-transition detuning), and the only static part left is the diagonal of
pairwise excitation shifts.  A drive term k contributes

    H(t) += amp_g * env(t) * exp(i*(phase_g + omega_g*t)) |ii_k><jj_k| + h.c.

where g = grp[k] indexes its coefficient group (terms lifted from the same
single-ion transition share one group, so the complex exponential is evaluated
once per group and time).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["TermSet", "EnvelopeSpec", "Dissipator", "DP_A", "DP_B5", "DP_E", "DP_C"]


@dataclass
class TermSet:
    """Sparse drive terms plus the static diagonal (rad/s)."""

    dim: int
    diag: np.ndarray          # float64 (dim,)
    ii: np.ndarray            # int32 (nterms,) raising row index
    jj: np.ndarray            # int32 (nterms,) raising column index
    grp: np.ndarray           # int32 (nterms,) coefficient group of each term
    amps: np.ndarray          # float64 (ngroups,)
    phases: np.ndarray        # float64 (ngroups,)
    omegas: np.ndarray        # float64 (ngroups,) rad/s

    def __post_init__(self):
        self.diag = np.ascontiguousarray(self.diag, dtype=np.float64)
        self.ii = np.ascontiguousarray(self.ii, dtype=np.int32)
        self.jj = np.ascontiguousarray(self.jj, dtype=np.int32)
        self.grp = np.ascontiguousarray(self.grp, dtype=np.int32)
        self.amps = np.ascontiguousarray(self.amps, dtype=np.float64)
        self.phases = np.ascontiguousarray(self.phases, dtype=np.float64)
        self.omegas = np.ascontiguousarray(self.omegas, dtype=np.float64)

    @staticmethod
    def empty(dim: int, diag=None) -> "TermSet":
        z = np.zeros(0)
        return TermSet(
            dim,
            np.zeros(dim) if diag is None else diag,
            z.astype(np.int32),
            z.astype(np.int32),
            z.astype(np.int32),
            z,
            z,
            z,
        )


@dataclass
class EnvelopeSpec:
    """Cut Gaussian Rabi envelope on [t_start, t_start + t_g]; zero outside."""

    c1: float
    c2: float
    sigma: float
    t_g: float
    t_start: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        u = t - self.t_start
        val = self.c1 * np.exp(-((u - 0.5 * self.t_g) ** 2) / (2.0 * self.sigma**2)) - self.c2
        out = np.where((u >= 0.0) & (u <= self.t_g), val, 0.0)
        return float(out) if out.ndim == 0 else out

    @staticmethod
    def off() -> "EnvelopeSpec":
        return EnvelopeSpec(0.0, 0.0, 1.0, 0.0, 0.0)


@dataclass
class Dissipator:
    """Lindblad pieces for density-matrix propagation.

    ``damp`` collects the elementwise decay of every matrix element (pure
    dephasing plus the anticommutator part of all jump operators).  ``refill``
    lists quadruples: rho[di, dj] += rate * rho[si, sj] (the L rho L^dagger
    sandwich expanded over jump-operator entry pairs).
    """

    damp: np.ndarray          # float64 (dim, dim)
    r_di: np.ndarray          # int32 (nrefill,)
    r_dj: np.ndarray
    r_si: np.ndarray
    r_sj: np.ndarray
    r_rate: np.ndarray        # float64 (nrefill,)

    def __post_init__(self):
        self.damp = np.ascontiguousarray(self.damp, dtype=np.float64)
        for name in ("r_di", "r_dj", "r_si", "r_sj"):
            setattr(self, name, np.ascontiguousarray(getattr(self, name), dtype=np.int32))
        self.r_rate = np.ascontiguousarray(self.r_rate, dtype=np.float64)


# Dormand-Prince 5(4) tableau (the ode45 pair).
DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# b5 - b4: weights of the embedded error estimate
DP_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)


class StepSizeUnderflow(RuntimeError):
    """Adaptive step size fell below the representable resolution."""


class MaxStepsExceeded(RuntimeError):
    """Step budget exhausted before reaching the end of the interval."""
