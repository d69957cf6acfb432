"""Qubit reduction, Bloch vectors, gate errors, and the QBies composition.

The QBies estimate treats every error source as an independent pair
(rotation matrix, shrinkage factor) acting on the error-free qubit Bloch
vector; the composed vector is the ordered product of those pairs applied to
the error-free vector, largest rotation angle first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TARGET_AFTER_NOT",
    "ErrorSourceEffect",
    "bloch_vector",
    "decompose_effect",
    "error_from_bloch",
    "gate_error",
    "qbies_compose",
    "reduce_to_qubit",
]

# NOT applied to (0, 1, 0): the error-free result.
TARGET_AFTER_NOT = np.array([0.0, -1.0, 0.0])


def reduce_to_qubit(rho_full: np.ndarray, qubit_dim: int, levels=(0, 1)):
    """Trace out everything but the first tensor factor and project on {|0>,|1>}.

    Parameters
    ----------
    rho_full:
        Density matrix of the composite system; the qubit is the first factor.
    qubit_dim:
        Dimension of the qubit ion (2, 3 or 6).
    levels:
        Indices of the computational levels within the qubit factor.

    Returns
    -------
    (rho2, leakage):
        ``rho2`` is the (unnormalized) 2x2 computational block; ``leakage`` is
        the qubit population outside that block, so tr(rho2) + leakage = 1.
    """
    dim = rho_full.shape[0]
    if rho_full.shape != (dim, dim) or dim % qubit_dim != 0:
        raise ValueError("composite dimension incompatible with qubit_dim")
    env = dim // qubit_dim
    r = rho_full.reshape(qubit_dim, env, qubit_dim, env)
    rho_q = np.trace(r, axis1=1, axis2=3)
    i, j = levels
    rho2 = np.array([[rho_q[i, i], rho_q[i, j]], [rho_q[j, i], rho_q[j, j]]])
    leakage = float(np.real(np.trace(rho_q) - np.trace(rho2)))
    return rho2, leakage


def bloch_vector(rho2: np.ndarray) -> np.ndarray:
    """(u, v, w) of a 2x2 (possibly unnormalized) qubit block."""
    u = float(np.real(rho2[0, 1] + rho2[1, 0]))
    v = float(np.real(1j * (rho2[0, 1] - rho2[1, 0])))
    w = float(np.real(rho2[0, 0] - rho2[1, 1]))
    return np.array([u, v, w])


def gate_error(rho2: np.ndarray, target: np.ndarray) -> float:
    """1 - <target|rho|target> for a normalized pure target state."""
    target = np.asarray(target, dtype=complex)
    nrm = np.vdot(target, target).real
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError("target state must be normalized")
    return float(1.0 - np.real(np.vdot(target, rho2 @ target)))


def error_from_bloch(a: np.ndarray, target: np.ndarray = TARGET_AFTER_NOT) -> float:
    """Gate error of Bloch vector ``a`` against a pure target direction.

    (1 - a . t)/2; reduces to (1 + v)/2 for the NOT target (0, -1, 0).
    """
    return float(0.5 * (1.0 - np.dot(a, target)))


@dataclass(frozen=True)
class ErrorSourceEffect:
    """Rotation + shrinkage a single error source inflicts on the qubit."""

    rotation: np.ndarray
    shrinkage: float
    angle: float

    def apply(self, a: np.ndarray) -> np.ndarray:
        return self.shrinkage * (self.rotation @ a)

    @staticmethod
    def identity() -> "ErrorSourceEffect":
        return ErrorSourceEffect(np.eye(3), 1.0, 0.0)


def _fallback_axis(ref: np.ndarray) -> np.ndarray:
    # least-aligned coordinate axis, projected perpendicular to ref
    k = int(np.argmin(np.abs(ref)))
    e = np.zeros(3)
    e[k] = 1.0
    perp = e - np.dot(e, ref) * ref
    return perp / np.linalg.norm(perp)


def decompose_effect(observed: np.ndarray, reference: np.ndarray) -> ErrorSourceEffect:
    """Split an observed Bloch vector into rotation + shrinkage of ``reference``.

    ``reference`` must be a unit vector (the error-free target).  The rotation
    is the minimal-angle rotation taking the reference direction onto the
    observed direction (Rodrigues form about their cross product); shrinkage is
    |observed|.  A zero observed vector gives the identity rotation with zero
    shrinkage; the antipodal case rotates by pi about a deterministic fallback
    axis perpendicular to the reference.
    """
    observed = np.asarray(observed, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if abs(np.linalg.norm(reference) - 1.0) > 1e-9:
        raise ValueError("reference must have unit length")
    s = float(np.linalg.norm(observed))
    if s < 1e-300:
        return ErrorSourceEffect(np.eye(3), 0.0, 0.0)
    o_hat = observed / s
    c = float(np.dot(reference, o_hat))
    axis = np.cross(reference, o_hat)
    sin = float(np.linalg.norm(axis))
    angle = float(np.arctan2(sin, c))
    if sin < 1e-15:
        if c > 0.0:
            return ErrorSourceEffect(np.eye(3), s, 0.0)
        axis = _fallback_axis(reference)
        angle = np.pi
    else:
        axis = axis / sin
    K = np.array(
        [
            [0.0, -axis[2], axis[1]],
            [axis[2], 0.0, -axis[0]],
            [-axis[1], axis[0], 0.0],
        ]
    )
    R = np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)
    return ErrorSourceEffect(R, s, angle)


def qbies_compose(effects, a0: np.ndarray) -> np.ndarray:
    """Apply a product of (shrinkage * rotation) factors to ``a0``.

    Effects are ordered by descending rotation angle (ties broken by input
    position, i.e. ion index) and multiplied as a left product, so the largest
    rotation is the leftmost factor.
    """
    a0 = np.asarray(a0, dtype=float)
    order = sorted(range(len(effects)), key=lambda n: (-effects[n].angle, n))
    m = np.eye(3)
    for n in order:
        eff = effects[n]
        m = m @ (eff.shrinkage * eff.rotation)
    return m @ a0


# -- vectorized forms used by the Monte Carlo pipeline --------------------------


def decompose_many(observed: np.ndarray, reference: np.ndarray):
    """Vectorized decompose_effect: (n, 3) vectors -> (shrink, angle, axis).

    Same conventions as decompose_effect, including the degenerate cases.
    """
    observed = np.atleast_2d(np.asarray(observed, dtype=float))
    reference = np.asarray(reference, dtype=float)
    n = observed.shape[0]
    s = np.linalg.norm(observed, axis=1)
    nz = s > 1e-300
    o_hat = np.where(nz[:, None], observed / np.where(nz, s, 1.0)[:, None], 0.0)
    c = o_hat @ reference
    axis = np.cross(np.broadcast_to(reference, (n, 3)), o_hat)
    sin = np.linalg.norm(axis, axis=1)
    angle = np.arctan2(sin, c)
    ok = sin >= 1e-15
    axis = np.where(ok[:, None], axis / np.where(ok, sin, 1.0)[:, None], 0.0)
    # parallel: identity rotation; antipodal: pi about the fallback axis
    par = (~ok) & nz & (c > 0.0)
    anti = (~ok) & nz & (c <= 0.0)
    angle[par] = 0.0
    if anti.any():
        fb = _fallback_axis(reference)
        axis[anti] = fb
        angle[anti] = np.pi
    angle[~nz] = 0.0
    s = np.where(nz, s, 0.0)
    return s, angle, axis


def rotation_matrices(angle: np.ndarray, axis: np.ndarray) -> np.ndarray:
    """Rodrigues rotation matrices for (n,) angles about (n, 3) unit axes."""
    n = angle.shape[0]
    kx, ky, kz = axis[:, 0], axis[:, 1], axis[:, 2]
    zeros = np.zeros(n)
    K = np.stack(
        [
            np.stack([zeros, -kz, ky], axis=1),
            np.stack([kz, zeros, -kx], axis=1),
            np.stack([-ky, kx, zeros], axis=1),
        ],
        axis=1,
    )
    eye = np.broadcast_to(np.eye(3), (n, 3, 3))
    sin = np.sin(angle)[:, None, None]
    cos1 = (1.0 - np.cos(angle))[:, None, None]
    return eye + sin * K + cos1 * (K @ K)


def compose_sorted(shrink: np.ndarray, angle: np.ndarray, axis: np.ndarray, a0: np.ndarray):
    """qbies_compose on vectorized effects; returns the composed Bloch vector.

    Sorting and product order match qbies_compose; the ordered product is
    evaluated by pairwise tree reduction (matrix multiplication is
    associative, so the order is preserved).
    """
    a0 = np.asarray(a0, dtype=float)
    if shrink.size == 0:
        return a0.copy()
    order = np.lexsort((np.arange(angle.size), -angle))
    mats = rotation_matrices(angle[order], axis[order]) * shrink[order][:, None, None]
    while mats.shape[0] > 1:
        m = mats.shape[0]
        half = m // 2
        head = np.matmul(mats[: 2 * half : 2], mats[1 : 2 * half : 2])
        mats = np.concatenate([head, mats[2 * half :]], axis=0) if m % 2 else head
    return mats[0] @ a0
