"""Composite qubit + non-qubit-ion systems and their Hamiltonian terms.

The composite Hilbert space is the tensor product with the qubit as the first
factor.  Pairwise excitation shifts enter as a static diagonal: every basis
state in which two ions are both in any excited level carries their shift.
Drive terms are kept in the interaction picture of the atomic Hamiltonian, so
each term oscillates at the detuning of its color from its transition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernel import Dissipator, EnvelopeSpec, TermSet
from .levels import LevelScheme
from .pulses import TwoColorGate

__all__ = ["IonModel", "LindbladParams", "CompositeSystem", "DimensionCapExceeded"]

DEFAULT_DIM_CAP = 1024


class DimensionCapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class LindbladParams:
    """Decay and decoherence of the optical transitions.

    Per-transition decay rates are branching/T1 (branching from the level
    scheme's oscillator strengths, equal weights otherwise); a pure dephasing
    term sized to 1/T2 - 1/(2*T1) acts on optical coherences only, so the total
    optical coherence decay matches 1/T2.  Hyperfine coherences stay undamped.
    """

    t1: float = 1.9e-3
    t2: float = 2.6e-3
    enabled: bool = True

    def __post_init__(self):
        if self.enabled:
            if self.t1 <= 0 or self.t2 <= 0:
                raise ValueError("T1 and T2 must be positive")
            if self.t2 > 2.0 * self.t1 * (1.0 + 1e-12):
                raise ValueError("T2 must not exceed 2*T1")

    @property
    def dephasing_rate(self) -> float:
        return 1.0 / self.t2 - 0.5 / self.t1

    @staticmethod
    def off() -> "LindbladParams":
        return LindbladParams(enabled=False)


@dataclass
class IonModel:
    """One ion of the composite: level structure, drive coupling, initial state.

    ``level_count`` is 2 (undriven ground/excited spectator), 3 (idealized
    lambda system |0>,|1>,|e>) or 6 (full hyperfine structure).  ``detuning``
    shifts all its optical transitions relative to the qubit's.  ``crosstalk``
    lets both gate colors drive every ground-excited transition, with Rabi
    amplitudes scaled by sqrt of the oscillator-strength ratio to the color's
    design transition; without it each color drives only its design transition.

    ``initial`` can be a role label ("zero", "one", "aux", "plus_i"), a level
    index, a pure amplitude vector, or ("mixed", populations).
    """

    level_count: int
    detuning: float = 0.0
    driven: bool = True
    crosstalk: bool = False
    initial: object = "zero"
    ground_offsets: np.ndarray | None = None   # Hz rel. own |0> analog
    excited_offsets: np.ndarray | None = None  # Hz rel. own |e> analog
    rabi_scales: np.ndarray | None = None      # (n_ground, n_excited) or None
    branching: np.ndarray | None = None        # decay weights (n_ground, n_excited)
    role_zero: int = 0
    role_one: int = 1
    role_e: int = 0   # index within the excited block

    def __post_init__(self):
        if self.level_count not in (2, 3, 6):
            raise ValueError("level_count must be 2, 3 or 6")

    # -- structure -------------------------------------------------------------

    @property
    def n_ground(self) -> int:
        return {2: 1, 3: 2, 6: 3}[self.level_count]

    @property
    def n_excited(self) -> int:
        return {2: 1, 3: 1, 6: 3}[self.level_count]

    @property
    def dim(self) -> int:
        return self.level_count

    def excited_mask(self) -> np.ndarray:
        m = np.zeros(self.dim, dtype=bool)
        m[self.n_ground :] = True
        return m

    def _offsets(self) -> tuple[np.ndarray, np.ndarray]:
        g = self.ground_offsets
        x = self.excited_offsets
        if g is None:
            g = np.zeros(self.n_ground)
        if x is None:
            x = np.zeros(self.n_excited)
        return np.asarray(g, dtype=float), np.asarray(x, dtype=float)

    def transition_offset(self, g: int, x: int) -> float:
        """Frequency of its (g, x) transition relative to the qubit |0>->|e> (Hz)."""
        gnd, exc = self._offsets()
        return self.detuning + exc[x] - exc[self.role_e] - (gnd[g] - gnd[self.role_zero])

    def drive_pairs(self) -> list[tuple[int, int, int, float]]:
        """(g, x, color, scale) tuples of driven transitions."""
        if not self.driven:
            return []
        pairs = []
        designs = {0: (self.role_zero, self.role_e), 1: (self.role_one, self.role_e)}
        if self.level_count == 2:
            return []
        for color, (gd, xd) in designs.items():
            if self.crosstalk:
                for g in range(self.n_ground):
                    for x in range(self.n_excited):
                        s = 1.0
                        if self.rabi_scales is not None:
                            s = math.sqrt(
                                self.rabi_scales[g, x] / self.rabi_scales[gd, xd]
                            )
                        pairs.append((g, x, color, s))
            else:
                pairs.append((gd, xd, color, 1.0))
        return pairs

    def branching_matrix(self) -> np.ndarray:
        """Decay weights b[g, x] from each excited level; columns sum to 1."""
        if self.branching is not None:
            b = np.asarray(self.branching, dtype=float)
        else:
            b = np.ones((self.n_ground, self.n_excited))
        return b / b.sum(axis=0, keepdims=True)

    def initial_vector(self):
        """Pure amplitude vector, or ("mixed", populations)."""
        init = self.initial
        if isinstance(init, tuple) and init[0] == "mixed":
            pops = np.asarray(init[1], dtype=float)
            if pops.shape != (self.dim,) or abs(pops.sum() - 1.0) > 1e-9 or pops.min() < -1e-12:
                raise ValueError("mixed populations must be a distribution over levels")
            return ("mixed", np.clip(pops, 0.0, None))
        v = np.zeros(self.dim, dtype=complex)
        if isinstance(init, str):
            if init == "plus_i":
                v[self.role_zero] = 1.0 / math.sqrt(2.0)
                v[self.role_one] = 1j / math.sqrt(2.0)
                return v
            idx = {"zero": self.role_zero, "one": self.role_one, "aux": 2,
                   "ground": 0, "excited": self.n_ground}[init]
            v[idx] = 1.0
            return v
        if isinstance(init, (int, np.integer)):
            v[int(init)] = 1.0
            return v
        arr = np.asarray(init, dtype=complex)
        if arr.shape != (self.dim,):
            raise ValueError("initial amplitude vector has wrong length")
        nrm = np.linalg.norm(arr)
        if abs(nrm - 1.0) > 1e-9:
            raise ValueError("initial state must be normalized")
        return arr

    # -- factories ------------------------------------------------------------

    @staticmethod
    def qubit3(scheme: LevelScheme, initial="plus_i") -> "IonModel":
        """Idealized 3-level qubit: each color drives only its own transition."""
        return IonModel.three_level(scheme, 0.0, initial=initial)

    @staticmethod
    def three_level(
        scheme_or_splitting,
        detuning: float = 0.0,
        initial="plus_i",
        crosstalk: bool = False,
        driven: bool = True,
    ) -> "IonModel":
        if isinstance(scheme_or_splitting, LevelScheme):
            split = scheme_or_splitting.qubit_splitting()
        else:
            split = float(scheme_or_splitting)
        return IonModel(
            3,
            detuning=detuning,
            driven=driven,
            crosstalk=crosstalk,
            initial=initial,
            ground_offsets=np.array([0.0, -split]),
            excited_offsets=np.array([0.0]),
        )

    @staticmethod
    def six_level(
        scheme: LevelScheme,
        detuning: float = 0.0,
        initial="zero",
        driven: bool = True,
        crosstalk: bool = True,
    ) -> "IonModel":
        g0 = scheme.ground_energies[scheme.role_zero]
        x0 = scheme.excited_energies[scheme.role_e]
        return IonModel(
            6,
            detuning=detuning,
            driven=driven,
            crosstalk=crosstalk,
            initial=_map_initial_six(scheme, initial),
            ground_offsets=np.asarray(scheme.ground_energies) - g0,
            excited_offsets=np.asarray(scheme.excited_energies) - x0,
            rabi_scales=scheme.rel_osc_strength,
            branching=scheme.rel_osc_strength,
            role_zero=scheme.role_zero,
            role_one=scheme.role_one,
            role_e=scheme.role_e,
        )

    @staticmethod
    def two_level(excited_population: float = 0.0) -> "IonModel":
        if not 0.0 <= excited_population <= 1.0:
            raise ValueError("excited population must lie in [0, 1]")
        return IonModel(
            2,
            driven=False,
            initial=("mixed", np.array([1.0 - excited_population, excited_population])),
        )


def _map_initial_six(scheme: LevelScheme, initial):
    """Translate role labels / ground triples to the 6-level basis."""
    if isinstance(initial, str):
        if initial == "aux":
            return scheme.role_aux
        if initial == "plus_i":
            v = np.zeros(6, dtype=complex)
            v[scheme.role_zero] = 1.0 / math.sqrt(2.0)
            v[scheme.role_one] = 1j / math.sqrt(2.0)
            return v
        return {"zero": scheme.role_zero, "one": scheme.role_one}[initial]
    if isinstance(initial, tuple) and initial[0] == "mixed_ground":
        pops = np.zeros(6)
        pops[:3] = np.asarray(initial[1], dtype=float)
        pops /= pops.sum()
        return ("mixed", pops)
    return initial


class CompositeSystem:
    """Qubit (first factor) plus non-qubit ions with pairwise shifts."""

    def __init__(
        self,
        qubit: IonModel,
        ions: list[IonModel] = (),
        shifts_hz: np.ndarray | None = None,
        gate: TwoColorGate | None = None,
        scheme: LevelScheme | None = None,
        dim_cap: int = DEFAULT_DIM_CAP,
    ):
        self.qubit = qubit
        self.ions = list(ions)
        self.all_ions = [qubit] + self.ions
        self.gate = gate or TwoColorGate.not_gate()
        self.scheme = scheme
        n = len(self.all_ions)
        if shifts_hz is None:
            shifts_hz = np.zeros((n, n))
        shifts_hz = np.asarray(shifts_hz, dtype=float)
        if shifts_hz.shape != (n, n):
            raise ValueError("shift table must be (N+1) x (N+1) including the qubit")
        if not np.allclose(shifts_hz, shifts_hz.T, rtol=0.0, atol=1e-9):
            raise ValueError("shift table must be symmetric")
        self.shifts_hz = shifts_hz
        self.dims = [m.dim for m in self.all_ions]
        self.dim = int(np.prod(self.dims))
        if self.dim > dim_cap:
            raise DimensionCapExceeded(
                f"composite dimension {self.dim} exceeds the cap {dim_cap}"
            )
        # color carrier frequencies rel. qubit |0>->|e>
        if scheme is not None:
            self._color_freq = [scheme.color_frequency(0), scheme.color_frequency(1)]
        else:
            gnd, _ = qubit._offsets()
            split = gnd[qubit.role_zero] - gnd[qubit.role_one] if qubit.dim > 2 else 0.0
            self._color_freq = [0.0, split]
        self._level_grids = np.meshgrid(
            *[np.arange(d) for d in self.dims], indexing="ij"
        )
        self._excited_masks = [
            m.excited_mask()[g].ravel() for m, g in zip(self.all_ions, self._level_grids)
        ]

    # -- static structure -------------------------------------------------------

    def color_frequency(self, color: int) -> float:
        return self._color_freq[color]

    def shift_diagonal(self) -> np.ndarray:
        """Static diagonal (rad/s): sum of shifts over doubly excited pairs."""
        diag = np.zeros(self.dim)
        n = len(self.all_ions)
        for a in range(n):
            for b in range(a + 1, n):
                if self.shifts_hz[a, b] != 0.0:
                    both = self._excited_masks[a] & self._excited_masks[b]
                    diag[both] += 2.0 * math.pi * self.shifts_hz[a, b]
        return diag

    def _lift_entry(self, ion_index: int, i_loc: int, j_loc: int):
        """Composite (I, J) index arrays of a local |i_loc><j_loc| operator."""
        grid = self._level_grids[ion_index]
        sel = (grid == j_loc).ravel()
        idx = np.nonzero(sel)[0].astype(np.int64)
        stride = int(np.prod(self.dims[ion_index + 1 :]))
        return (idx + (i_loc - j_loc) * stride).astype(np.int32), idx.astype(np.int32)

    def drive_terms(self, pulse_index: int) -> TermSet:
        """TermSet of one gate pulse (0 or 1) of the two-color gate."""
        phi = self.gate.pulse_phases(pulse_index)
        ii, jj, grp = [], [], []
        amps, phases, omegas = [], [], []
        for m, ion in enumerate(self.all_ions):
            for g, x, color, scale in ion.drive_pairs():
                nu_t = ion.transition_offset(g, x)
                omega = 2.0 * math.pi * (nu_t - self._color_freq[color])
                gi = len(amps)
                amps.append(0.5 * scale)
                phases.append(-phi[color])
                omegas.append(omega)
                li, lj = self._lift_entry(m, ion.n_ground + x, g)
                ii.append(li)
                jj.append(lj)
                grp.append(np.full(li.size, gi, dtype=np.int32))
        if amps:
            ii = np.concatenate(ii)
            jj = np.concatenate(jj)
            grp = np.concatenate(grp)
        else:
            ii = jj = grp = np.zeros(0, dtype=np.int32)
        return TermSet(
            self.dim,
            self.shift_diagonal(),
            ii,
            jj,
            grp,
            np.asarray(amps),
            np.asarray(phases),
            np.asarray(omegas),
        )

    def envelope_spec(self, pulse_index: int) -> EnvelopeSpec:
        env = self.gate.envelope
        return EnvelopeSpec(env.c1, env.c2, env.sigma, env.t_g, pulse_index * env.t_g)

    def dissipator(self, lindblad: LindbladParams) -> Dissipator | None:
        """Lindblad pieces: per-transition decay plus optical pure dephasing."""
        if lindblad is None or not lindblad.enabled:
            return None
        dim = self.dim
        damp = np.zeros((dim, dim))
        r_di, r_dj, r_si, r_sj, r_rate = [], [], [], [], []
        gamma_out = np.zeros(dim)
        for m, ion in enumerate(self.all_ions):
            b = ion.branching_matrix()
            for x in range(ion.n_excited):
                for g in range(ion.n_ground):
                    rate = b[g, x] / lindblad.t1
                    if rate == 0.0:
                        continue
                    li, lj = self._lift_entry(m, g, ion.n_ground + x)
                    # L = sum_k |li_k><lj_k|: refill couples all entry pairs
                    ki, kj = np.meshgrid(np.arange(li.size), np.arange(li.size), indexing="ij")
                    r_di.append(li[ki.ravel()])
                    r_dj.append(li[kj.ravel()])
                    r_si.append(lj[ki.ravel()])
                    r_sj.append(lj[kj.ravel()])
                    r_rate.append(np.full(ki.size, rate))
                    gamma_out[lj] += rate
            # optical pure dephasing: coherences between this ion's ground and
            # excited blocks decay; everything else untouched
            gphi = lindblad.dephasing_rate
            if gphi > 0.0:
                em = self._excited_masks[m]
                damp += gphi * (em[:, None] ^ em[None, :])
        damp += 0.5 * (gamma_out[:, None] + gamma_out[None, :])
        if r_rate:
            r_di = np.concatenate(r_di)
            r_dj = np.concatenate(r_dj)
            r_si = np.concatenate(r_si)
            r_sj = np.concatenate(r_sj)
            r_rate = np.concatenate(r_rate)
        else:
            r_di = r_dj = r_si = r_sj = np.zeros(0, dtype=np.int32)
            r_rate = np.zeros(0)
        return Dissipator(damp, r_di, r_dj, r_si, r_sj, r_rate)

    # -- states -----------------------------------------------------------------

    def initial_branches(self):
        """Initial state as weighted pure branches [(weight, psi), ...].

        Mixed single-ion initial states are diagonal, so the composite density
        matrix is an exact mixture of product pure states.
        """
        branches = [(1.0, [])]
        for ion in self.all_ions:
            init = ion.initial_vector()
            new = []
            if isinstance(init, tuple):
                pops = init[1]
                for lvl, p in enumerate(pops):
                    if p > 0.0:
                        v = np.zeros(ion.dim, dtype=complex)
                        v[lvl] = 1.0
                        new.extend((w * p, vs + [v]) for w, vs in branches)
            else:
                new.extend((w, vs + [init]) for w, vs in branches)
            branches = new
        out = []
        for w, vs in branches:
            psi = vs[0]
            for v in vs[1:]:
                psi = np.kron(psi, v)
            out.append((w, psi))
        return out

    def initial_rho(self) -> np.ndarray:
        rho = np.zeros((self.dim, self.dim), dtype=complex)
        for w, psi in self.initial_branches():
            rho += w * np.outer(psi, psi.conj())
        return rho

    def hamiltonian(self, t: float, pulse_index: int = 0) -> np.ndarray:
        """Dense interaction-picture H(t) (rad/s) during the given gate pulse.

        Time is measured from the start of the gate; pulse 1 occupies
        [t_g, 2 t_g].
        """
        from ._kernel._python import _build_w

        terms = self.drive_terms(pulse_index)
        env = self.envelope_spec(pulse_index)
        h = _build_w(terms, env, t)
        h[np.diag_indices_from(h)] += terms.diag
        return h
