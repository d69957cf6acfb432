"""Energy level scheme of the dopant ion and its qubit role assignment.

All frequencies are plain Hz.  Transition offsets are expressed relative to the
qubit's |0> -> |e> transition, which is the frequency origin used everywhere in
this package (gate pulses, detunings, hole-burning grids).
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field

import numpy as np
import yaml

__all__ = ["LevelScheme", "load_level_scheme", "scheme_hash"]

_ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class LevelScheme:
    """Three doubly degenerate ground and excited hyperfine levels.

    Parameters
    ----------
    ground_energies:
        Energies (Hz) of the ground levels, in manifold order.
    excited_energies:
        Energies (Hz) of the excited levels, in manifold order.
    rel_osc_strength:
        3x3 matrix of relative oscillator strengths, rows = ground levels,
        columns = excited levels.  Each row sums to 1.
    role_zero, role_one, role_aux:
        Indices of |0>, |1>, |aux> within the ground manifold.
    role_e:
        Index of |e> within the excited manifold.
    """

    ground_energies: tuple[float, float, float]
    excited_energies: tuple[float, float, float]
    rel_osc_strength: np.ndarray = field(repr=False)
    role_zero: int = 0
    role_one: int = 1
    role_aux: int = 2
    role_e: int = 2

    def __post_init__(self):
        object.__setattr__(
            self, "rel_osc_strength", np.asarray(self.rel_osc_strength, dtype=float)
        )
        f = self.rel_osc_strength
        if f.shape != (3, 3):
            raise ValueError("rel_osc_strength must be 3x3")
        if np.any(f < 0.0) or np.any(f > 1.0):
            raise ValueError("oscillator strengths must lie in [0, 1]")
        if np.any(np.abs(f.sum(axis=1) - 1.0) > _ROW_SUM_TOL):
            raise ValueError("oscillator strength rows must sum to 1 (branching)")
        for name in ("ground_energies", "excited_energies"):
            e = getattr(self, name)
            if not (e[0] > e[1] > e[2] or e[0] < e[1] < e[2]):
                raise ValueError(f"{name} must be strictly ordered")
        roles = {self.role_zero, self.role_one, self.role_aux}
        if roles != {0, 1, 2}:
            raise ValueError("ground roles must be a permutation of 0,1,2")

    # -- frequency bookkeeping ------------------------------------------------

    def ground_offset(self, g: int) -> float:
        """Energy of ground level ``g`` relative to |0> (Hz, <= 0 here)."""
        return self.ground_energies[g] - self.ground_energies[self.role_zero]

    def excited_offset(self, x: int) -> float:
        """Energy of excited level ``x`` relative to |e> (Hz)."""
        return self.excited_energies[x] - self.excited_energies[self.role_e]

    def transition_offset(self, g: int, x: int) -> float:
        """Frequency of the g -> x transition relative to |0> -> |e> (Hz)."""
        return self.excited_offset(x) - self.ground_offset(g)

    def qubit_splitting(self) -> float:
        """|0> - |1> ground splitting (Hz, positive)."""
        return self.ground_offset(self.role_zero) - self.ground_offset(self.role_one)

    def color_frequency(self, color: int) -> float:
        """Carrier frequency of gate color 0 or 1, relative to |0> -> |e> (Hz)."""
        g = self.role_zero if color == 0 else self.role_one
        return self.transition_offset(g, self.role_e)

    def color_design_transition(self, color: int) -> tuple[int, int]:
        g = self.role_zero if color == 0 else self.role_one
        return g, self.role_e

    def branching_from(self, x: int) -> np.ndarray:
        """Decay branching ratios from excited level ``x`` to the grounds."""
        col = self.rel_osc_strength[:, x]
        return col / col.sum()

    def rabi_scale(self, g: int, x: int, design: tuple[int, int]) -> float:
        """Rabi amplitude of transition (g, x) relative to the design transition.

        Scales with the square root of the oscillator strength ratio.
        """
        return float(
            np.sqrt(self.rel_osc_strength[g, x] / self.rel_osc_strength[design])
        )


def load_level_scheme(path=None) -> LevelScheme:
    """Load a level scheme from a YAML data file (default: packaged Eu:YSO site 1)."""
    if path is None:
        ref = importlib.resources.files("isdsim.data") / "eu_yso_site1_levels.yaml"
        raw = yaml.safe_load(ref.read_text())
    else:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    roles = raw["roles"]
    return LevelScheme(
        ground_energies=tuple(float(v) for v in raw["ground_energies_hz"]),
        excited_energies=tuple(float(v) for v in raw["excited_energies_hz"]),
        rel_osc_strength=np.asarray(raw["rel_osc_strength"], dtype=float),
        role_zero=int(roles["zero"]),
        role_one=int(roles["one"]),
        role_aux=int(roles["aux"]),
        role_e=int(roles["e"]),
    )


def scheme_hash(scheme: LevelScheme) -> str:
    """Short stable hash of the numeric content, used to key cached artifacts."""
    import hashlib

    h = hashlib.sha256()
    h.update(np.asarray(scheme.ground_energies).tobytes())
    h.update(np.asarray(scheme.excited_energies).tobytes())
    h.update(scheme.rel_osc_strength.tobytes())
    h.update(bytes([scheme.role_zero, scheme.role_one, scheme.role_aux, scheme.role_e]))
    return h.hexdigest()[:12]
