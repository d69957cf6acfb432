"""Pure numpy implementation of the adaptive Dormand-Prince propagators.

Reference implementation and import-time fallback when the compiled extension
is unavailable.  Same semantics as ``_core`` but roughly two orders of
magnitude slower on the hot paths; see benchmarks/bench_kernel.py.
"""

from __future__ import annotations

import numpy as np

from .common import (
    DP_A,
    DP_B5,
    DP_C,
    DP_E,
    Dissipator,
    EnvelopeSpec,
    MaxStepsExceeded,
    StepSizeUnderflow,
    TermSet,
)

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0
_PI_ALPHA = 0.17
_PI_BETA = 0.04


def _group_coeffs(terms: TermSet, env: EnvelopeSpec, t: float) -> np.ndarray:
    om = env(t)
    return terms.amps * om * np.exp(1j * (terms.phases + terms.omegas * t))


def _build_w(terms: TermSet, env: EnvelopeSpec, t: float) -> np.ndarray:
    """Dense drive matrix W(t) (without the static diagonal)."""
    w = np.zeros((terms.dim, terms.dim), dtype=complex)
    if terms.ii.size:
        c = _group_coeffs(terms, env, t)[terms.grp]
        np.add.at(w, (terms.ii, terms.jj), c)
    return w + w.conj().T


def _rhs_psi(terms, env, t, psi):
    w = _build_w(terms, env, t)
    return -1j * (terms.diag * psi + w @ psi)


def _rhs_rho(terms, env, diss, t, rho):
    h = _build_w(terms, env, t)
    h[np.diag_indices_from(h)] += terms.diag
    out = -1j * (h @ rho - rho @ h)
    if diss is not None:
        out -= diss.damp * rho
        if diss.r_rate.size:
            np.add.at(
                out,
                (diss.r_di, diss.r_dj),
                diss.r_rate * rho[diss.r_si, diss.r_sj],
            )
    return out


def _error_norm(err, y0, y1, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((np.abs(err) / scale) ** 2)))


def _initial_step(f, t0, t1, y0, f0, rtol, atol):
    span = t1 - t0
    scale = atol + rtol * np.abs(y0)
    d0 = float(np.sqrt(np.mean((np.abs(y0) / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((np.abs(f0) / scale) ** 2)))
    h0 = 1e-6 * span if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = f(t0 + h0, y0 + h0 * f0)
    d2 = float(np.sqrt(np.mean((np.abs(f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6 * span, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, span)


def _propagate(f, y0, t0, t1, rtol, atol, max_steps):
    t = t0
    y = y0.copy()
    k1 = f(t, y)
    h = _initial_step(f, t0, t1, y, k1, rtol, atol)
    err_old = 1.0
    n_acc = n_rej = 0
    stages = [None] * 7
    tiny = 16.0 * np.finfo(float).eps
    while t < t1:
        h = min(h, t1 - t)
        if h < tiny * max(abs(t), abs(t1 - t0)):
            raise StepSizeUnderflow(f"step size underflow at t={t!r}")
        stages[0] = k1
        for s in range(1, 7):
            ys = y + h * sum(a * ks for a, ks in zip(DP_A[s], stages[:s]))
            stages[s] = f(t + DP_C[s] * h, ys)
        y1 = y + h * sum(b * ks for b, ks in zip(DP_B5, stages) if b != 0.0)
        err_vec = h * sum(e * ks for e, ks in zip(DP_E, stages) if e != 0.0)
        err = _error_norm(err_vec, y, y1, rtol, atol)
        if err <= 1.0:
            t = t + h
            y = y1
            k1 = stages[6]  # FSAL
            fac = _SAFETY * (err + 1e-30) ** (-_PI_ALPHA) * err_old ** _PI_BETA
            h *= min(_FAC_MAX, max(_FAC_MIN, fac))
            err_old = max(err, 1e-10)
            n_acc += 1
        else:
            fac = _SAFETY * err ** (-0.2)
            h *= max(_FAC_MIN, min(1.0, fac))
            n_rej += 1
        if n_acc + n_rej > max_steps:
            raise MaxStepsExceeded(f"more than {max_steps} steps needed")
    return y, (n_acc, n_rej)


def propagate_psi(
    psi0: np.ndarray,
    terms: TermSet,
    env: EnvelopeSpec,
    t0: float,
    t1: float,
    rtol: float,
    atol: float,
    max_steps: int = 100_000_000,
):
    """Integrate d(psi)/dt = -i (diag + W(t)) psi from t0 to t1."""
    if t1 <= t0:
        return psi0.copy(), (0, 0)
    f = lambda t, y: _rhs_psi(terms, env, t, y)
    y0 = np.ascontiguousarray(psi0, dtype=complex)
    return _propagate(f, y0, t0, t1, rtol, atol, max_steps)


def propagate_rho(
    rho0: np.ndarray,
    terms: TermSet,
    env: EnvelopeSpec,
    diss: Dissipator | None,
    t0: float,
    t1: float,
    rtol: float,
    atol: float,
    max_steps: int = 100_000_000,
):
    """Integrate the Lindblad equation for the density matrix from t0 to t1."""
    if t1 <= t0:
        return rho0.copy(), (0, 0)
    f = lambda t, y: _rhs_rho(terms, env, diss, t, y)
    y0 = np.ascontiguousarray(rho0, dtype=complex)
    return _propagate(f, y0, t0, t1, rtol, atol, max_steps)
