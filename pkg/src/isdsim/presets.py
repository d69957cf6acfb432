"""Resolution presets.

``fast`` is the desk-scale preset used by the acceptance suite and CI on a
small machine; ``paper`` is the full-resolution configuration matching the
published statistics (documented long-running target, hours of compute).
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Resolution:
    name: str
    shift_points_per_sign: int      # log grid 1 kHz .. 100 MHz, plus 0
    detuning_step: float            # inside-map detuning axis step (Hz)
    excitation_step: float          # excitation-curve detuning step (Hz)
    p_points: int                   # outside-map excitation axis (log), plus 0
    burn_step: float                # hole-burning base grid step (Hz)
    burn_fine_step: float           # refinement near initialization pulses
    rtol_maps: float
    atol_maps: float
    rtol_curves: float
    atol_curves: float
    trials: int                     # default Monte Carlo trials per scenario

    @property
    def n_shift(self) -> int:
        return 2 * self.shift_points_per_sign + 1


FAST = Resolution(
    name="fast",
    shift_points_per_sign=15,
    detuning_step=20e6,
    excitation_step=10e6,
    p_points=17,
    burn_step=40e3,
    burn_fine_step=4e3,
    rtol_maps=1e-8,
    atol_maps=1e-8,
    rtol_curves=3e-8,
    atol_curves=1e-11,
    trials=100,
)

PAPER = Resolution(
    name="paper",
    shift_points_per_sign=81,
    detuning_step=2.5e6,
    excitation_step=2.5e6,
    p_points=33,
    burn_step=10e3,
    burn_fine_step=1e3,
    rtol_maps=1e-10,
    atol_maps=3e-14,
    rtol_curves=1e-10,
    atol_curves=3e-14,
    trials=1000,
)

PRESETS = {"fast": FAST, "paper": PAPER}


def get_preset(name: str) -> Resolution:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
