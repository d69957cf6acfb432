"""Time evolution of composite systems under gate pulses and dissipation.

The stepper is an adaptive Dormand-Prince 4(5) pair honoring both relative and
absolute tolerances.  Without dissipation the density matrix is propagated as
a mixture of pure branches (exact, since unitary evolution preserves the
eigendecomposition), which keeps large composites tractable; with dissipation
the full density matrix is integrated.
"""

from __future__ import annotations

import warnings

import numpy as np

from ._kernel import EnvelopeSpec, TermSet, propagate_psi, propagate_rho
from .system import CompositeSystem, LindbladParams

__all__ = ["InvariantViolation", "apply_gate", "evolve", "gate_sequence"]

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-10


class InvariantViolation(UserWarning):
    """Trace / hermiticity / positivity drifted beyond 10x the tolerance."""


def _check_invariants(rho: np.ndarray, tol: float, n_segments: int = 1):
    # global error heuristic: ~10x the local tolerance per gate pulse
    viol = max(
        abs(np.trace(rho).real - 1.0),
        abs(np.trace(rho).imag),
        float(np.max(np.abs(rho - rho.conj().T))),
    )
    if viol > 10.0 * max(tol, 1e-14) * max(1, n_segments):
        warnings.warn(
            f"density-matrix invariants drifted by {viol:.2e}", InvariantViolation
        )
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    bound = max(1e-8, 10.0 * tol * max(1, n_segments))
    if w.min() < -bound:
        warnings.warn(
            f"density matrix has eigenvalue {w.min():.2e} < -{bound:.0e}",
            InvariantViolation,
        )


def _segments(system: CompositeSystem, n_gates: int):
    t_g = system.gate.envelope.t_g
    for s in range(2 * n_gates):
        terms = system.drive_terms(s % 2)
        env = system.envelope_spec(0)
        env = EnvelopeSpec(env.c1, env.c2, env.sigma, env.t_g, s * t_g)
        yield s, terms, env, s * t_g, (s + 1) * t_g


def _free_segment(system: CompositeSystem, t0: float, t1: float):
    return TermSet.empty(system.dim, system.shift_diagonal()), EnvelopeSpec.off(), t0, t1


def evolve(
    system: CompositeSystem,
    rho0: np.ndarray | None = None,
    *,
    duration: float | None = None,
    lindblad: LindbladParams | None = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    check: bool = True,
) -> np.ndarray:
    """Free evolution (no drive) of the composite for ``duration`` seconds."""
    if duration is None:
        raise ValueError("duration required for free evolution")
    terms, env, t0, t1 = _free_segment(system, 0.0, duration)
    return _run(system, [(terms, env, t0, t1)], rho0, lindblad, rtol, atol, check)


def apply_gate(
    system: CompositeSystem,
    rho0: np.ndarray | None = None,
    *,
    lindblad: LindbladParams | None = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    n_gates: int = 1,
    check: bool = True,
) -> np.ndarray:
    """Apply ``n_gates`` two-pulse gates; returns the final density matrix."""
    segs = [
        (terms, env, t0, t1) for _, terms, env, t0, t1 in _segments(system, n_gates)
    ]
    return _run(system, segs, rho0, lindblad, rtol, atol, check)


def gate_sequence(
    system: CompositeSystem,
    rho0: np.ndarray | None = None,
    *,
    lindblad: LindbladParams | None = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    n_gates: int = 1,
) -> list[np.ndarray]:
    """Like apply_gate but returns the state after every completed gate."""
    out = []
    dissipative = lindblad is not None and lindblad.enabled
    if dissipative:
        rho = system.initial_rho() if rho0 is None else np.asarray(rho0, dtype=complex)
        diss = system.dissipator(lindblad)
        for s, terms, env, t0, t1 in _segments(system, n_gates):
            rho, _ = propagate_rho(rho, terms, env, diss, t0, t1, rtol, atol)
            if s % 2 == 1:
                out.append(rho.copy())
        return out
    branches = _branches_from(system, rho0)
    states = [list(b) for b in branches]
    for s, terms, env, t0, t1 in _segments(system, n_gates):
        for b in states:
            b[1], _ = propagate_psi(b[1], terms, env, t0, t1, rtol, atol)
            b[1] /= np.linalg.norm(b[1])
        if s % 2 == 1:
            out.append(_assemble(states))
    return out


def _branches_from(system: CompositeSystem, rho0):
    if rho0 is None:
        return system.initial_branches()
    rho0 = np.asarray(rho0, dtype=complex)
    w, v = np.linalg.eigh(0.5 * (rho0 + rho0.conj().T))
    keep = w > 1e-14
    return [(float(wi), np.ascontiguousarray(v[:, k])) for k, wi in zip(np.nonzero(keep)[0], w[keep])]


def _assemble(states) -> np.ndarray:
    dim = states[0][1].shape[0]
    rho = np.zeros((dim, dim), dtype=complex)
    for w, psi in states:
        rho += w * np.outer(psi, psi.conj())
    return rho


def _run(system, segments, rho0, lindblad, rtol, atol, check) -> np.ndarray:
    dissipative = lindblad is not None and lindblad.enabled
    if dissipative:
        rho = system.initial_rho() if rho0 is None else np.asarray(rho0, dtype=complex)
        diss = system.dissipator(lindblad)
        for terms, env, t0, t1 in segments:
            rho, _ = propagate_rho(rho, terms, env, diss, t0, t1, rtol, atol)
    else:
        states = [list(b) for b in _branches_from(system, rho0)]
        for terms, env, t0, t1 in segments:
            for b in states:
                b[1], _ = propagate_psi(b[1], terms, env, t0, t1, rtol, atol)
                # unitary segment: the norm is conserved exactly, so renormalize
                # away the integrator's norm drift
                b[1] /= np.linalg.norm(b[1])
        rho = _assemble(states)
    if check:
        _check_invariants(rho, max(rtol, atol), len(segments))
    return rho
