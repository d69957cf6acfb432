"""Rate-model simulation of transmission-window creation by spectral hole burning.

Populations of the six levels are tracked on a detuning grid spanning one
frequency channel.  A burn pulse exchanges population between the two levels of
each transition with a frequency-dependent probability (adiabatic transfer
pulses swap the level populations, which is also what deexcites the qubit);
decay redistributes excited population to the grounds by oscillator-strength
branching when the scheme step includes it.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .levels import LevelScheme, scheme_hash

__all__ = [
    "BurnPulse",
    "PopulationProfile",
    "apply_pulse",
    "absorption_spectrum",
    "compute_max_windows",
    "decay_step",
    "default_pulses",
    "make_grid",
    "run_scheme",
    "transfer_probability",
]

CHANNEL_LO = -335e6
CHANNEL_HI = 665e6
CHANNEL_WIDTH = 1e9
T2_OPTICAL = 2.6e-3
GAMMA_HB = 1.0 / T2_OPTICAL  # Lorentzian off-resonant floor width (Hz)

_P_FLOOR = 1e-12  # transfer probabilities below this are dropped (see run_scheme)


@dataclass(frozen=True)
class BurnPulse:
    """One frequency-scanning burn pulse of the window-preparation sequence."""

    nu_c: float                      # scan center, Hz rel. qubit |0>->|e>
    nu_scan: float                   # full scan width (Hz)
    nu_slope: float                  # edge slope (Hz)
    design_transition: tuple[int, int]  # (ground index, excited index)
    design_efficiency: float
    name: str = ""

    def __post_init__(self):
        if self.nu_scan < 0:
            raise ValueError("nu_scan must be >= 0")
        if not 0.0 < self.design_efficiency <= 1.0:
            raise ValueError("design_efficiency must lie in (0, 1]")


@dataclass
class PopulationProfile:
    """Level populations vs detuning from the qubit's |0> -> |e| transition.

    The profile is periodic with the 1 GHz channel spacing when queried; the
    stored grid spans one channel, [-335, 665] MHz.
    """

    grid: np.ndarray                 # (n,) detunings, Hz, strictly increasing
    pops: np.ndarray                 # (n, 6)
    nu_init: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.pops = np.asarray(self.pops, dtype=float)
        if self.pops.shape != (self.grid.size, 6):
            raise ValueError("pops must be (len(grid), 6)")

    def copy(self) -> "PopulationProfile":
        return PopulationProfile(self.grid.copy(), self.pops.copy(), self.nu_init, dict(self.meta))

    def fold(self, detuning):
        """Map any detuning into the stored channel period."""
        d = np.asarray(detuning, dtype=float)
        return ((d - CHANNEL_LO) % CHANNEL_WIDTH) + CHANNEL_LO

    def ground_probabilities(self, detuning):
        """Ground-state triple at a detuning (1 GHz periodic, normalized)."""
        d = np.atleast_1d(self.fold(detuning))
        out = np.empty((d.size, 3))
        for g in range(3):
            out[:, g] = np.interp(d, self.grid, self.pops[:, g])
        out /= out.sum(axis=1, keepdims=True)
        return out[0] if np.isscalar(detuning) or np.ndim(detuning) == 0 else out

    # -- columnar text IO (detuning + three ground probabilities) -------------

    def save(self, path):
        with open(path, "w") as fh:
            fh.write("# isdsim population profile v1\n")
            fh.write(f"# nu_init_hz={self.nu_init:.6e}\n")
            for key, val in sorted(self.meta.items()):
                fh.write(f"# {key}={val}\n")
            fh.write("detuning_hz,p_ground0,p_ground1,p_ground2\n")
            g = self.pops[:, :3]
            for i in range(self.grid.size):
                fh.write(
                    f"{self.grid[i]:.10e},{g[i,0]:.12e},{g[i,1]:.12e},{g[i,2]:.12e}\n"
                )

    @staticmethod
    def load(path) -> "PopulationProfile":
        meta = {}
        nu_init = 0.0
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    body = line[1:].strip()
                    if "=" in body:
                        k, v = body.split("=", 1)
                        if k == "nu_init_hz":
                            nu_init = float(v)
                        else:
                            meta[k] = v
                    continue
                if line.startswith("detuning"):
                    continue
                rows.append([float(x) for x in line.split(",")])
        arr = np.asarray(rows)
        pops = np.zeros((arr.shape[0], 6))
        pops[:, :3] = arr[:, 1:4]
        return PopulationProfile(arr[:, 0], pops, nu_init, meta)


def transition_offsets(scheme: LevelScheme) -> np.ndarray:
    """offsets[g, x]: frequency of (g, x) relative to the ion's own |0>->|e>."""
    out = np.empty((3, 3))
    for g in range(3):
        for x in range(3):
            out[g, x] = scheme.transition_offset(g, x)
    return out


def transfer_probability(nu, pulse: BurnPulse, transition: tuple[int, int], scheme: LevelScheme):
    """Probability that the pulse transfers the given transition at frequency nu.

    ``nu`` is the transition frequency relative to the qubit's |0> -> |e>.
    A tanh plateau of width nu_scan models the frequency scan; a Lorentzian
    floor of width gamma = 1/T2 models far-detuned off-resonant excitation.
    The efficiency scales with sqrt of the oscillator-strength ratio to the
    design transition, capped at 1.
    """
    g, x = transition
    if not (0 <= g < 3 and 0 <= x < 3):
        raise ValueError("unknown transition")
    eff = _scaled_efficiency(pulse, transition, scheme)
    nu = np.asarray(nu, dtype=float)
    delta = nu - pulse.nu_c
    if pulse.nu_scan > 0.0 and pulse.nu_slope > 0.0:
        p1 = 0.5 * (
            np.tanh((delta + 0.5 * pulse.nu_scan) / pulse.nu_slope)
            - np.tanh((delta - 0.5 * pulse.nu_scan) / pulse.nu_slope)
        )
    else:
        p1 = np.zeros_like(delta)
    p2 = GAMMA_HB**2 / (delta**2 + GAMMA_HB**2)
    p = eff * np.maximum(p1, p2)
    out = np.clip(p, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def _scaled_efficiency(pulse: BurnPulse, transition, scheme: LevelScheme) -> float:
    f = scheme.rel_osc_strength
    ratio = math.sqrt(f[transition] / f[pulse.design_transition])
    return min(1.0, pulse.design_efficiency * ratio)


def _swap(pops: np.ndarray, g: int, x: int, p):
    """Exchange a fraction p of the populations of ground g and excited x."""
    a = pops[:, g].copy()
    b = pops[:, 3 + x]
    pops[:, g] = a + p * (b - a)
    pops[:, 3 + x] = b + p * (a - b)


def apply_pulse(profile: PopulationProfile, pulse: BurnPulse, scheme: LevelScheme) -> PopulationProfile:
    """One application of a pulse to every grid point (all nine transitions)."""
    out = profile.copy()
    offs = transition_offsets(scheme)
    for g in range(3):
        for x in range(3):
            p = transfer_probability(out.grid + offs[g, x], pulse, (g, x), scheme)
            _swap(out.pops, g, x, p)
    if out.pops.min() < -1e-9:
        raise RuntimeError("population went negative beyond tolerance")
    return out


def decay_step(profile: PopulationProfile, scheme: LevelScheme) -> PopulationProfile:
    out = profile.copy()
    _decay_inplace(out.pops, scheme)
    return out


def _decay_inplace(pops: np.ndarray, scheme: LevelScheme):
    for x in range(3):
        b = scheme.branching_from(x)
        exc = pops[:, 3 + x].copy()
        for g in range(3):
            pops[:, g] += b[g] * exc
        pops[:, 3 + x] = 0.0


def default_pulses(scheme: LevelScheme, nu_init: float) -> list[BurnPulse]:
    """The five window-preparation pulses (centers in Hz rel. |0> -> |e>)."""
    e = scheme.role_e      # |5/2e> column
    x32 = 1                # |3/2e> column in manifold order
    z, a = scheme.role_zero, scheme.role_aux
    return [
        BurnPulse(0.0, 17e6, 250e3, (z, e), 0.60, "window0"),
        BurnPulse(79.35e6, 49.3e6, 250e3, (z, e), 0.60, "window1"),
        BurnPulse(-50.8e6, 1e6, 250e3, (a, x32), 0.60, "clear_aux"),
        BurnPulse(-50.8e6, nu_init, nu_init / 4.0, (a, x32), 0.999, "qubit_excite"),
        BurnPulse(-260e6, 10.0 * nu_init, 10.0 * nu_init / 4.0, (z, x32), 0.999, "qubit_deexcite"),
    ]


# (pulse indices, repetitions, include decay)
SCHEME_GOALS = [
    ((0, 1, 2), 20, True),    # clear windows and |aux>
    ((0, 1), 500, True),      # clear windows
    ((3,), 1, False),         # excite qubit
    ((4,), 1, False),         # deexcite qubit
    ((1,), 100, True),        # clear second window
]


def make_grid(nu_init: float, base_step: float = 10e3, fine_step: float = 1e3) -> np.ndarray:
    """Channel detuning grid, refined where the initialization pulses bite.

    Refinement bands: detunings whose transitions fall inside the scan region
    of pulses #4 or #5 (the ensemble peak and its by-products).
    """
    grid = [np.arange(CHANNEL_LO, CHANNEL_HI + base_step / 2, base_step)]
    if nu_init > 0.0:
        from .levels import load_level_scheme

        offs = transition_offsets(load_level_scheme()).ravel()
        for center, width in ((-50.8e6, 2.0 * nu_init), (-260e6, 11.0 * nu_init)):
            for o in offs:
                lo = center - width - o
                hi = center + width - o
                if hi < CHANNEL_LO or lo > CHANNEL_HI:
                    continue
                grid.append(np.arange(max(lo, CHANNEL_LO), min(hi, CHANNEL_HI), fine_step))
    g = np.unique(np.concatenate(grid))
    return g


def run_scheme(
    scheme: LevelScheme,
    nu_init: float = 0.0,
    n_qubits: int = 51,
    grid: np.ndarray | None = None,
    goals=None,
    progress=None,
) -> PopulationProfile:
    """Run the full interleaved window-preparation sequence.

    Each pulse is applied for all qubit channel centers before the next pulse;
    any excited population decays after each pulse when the goal includes
    decay.  With ``nu_init`` = 0 the initialization pulses act only on the
    qubit ion itself, which is tracked as a separate population vector at zero
    detuning.  Returns the profile of the central channel.
    """
    if nu_init < 0:
        raise ValueError("nu_init must be >= 0")
    if grid is None:
        grid = make_grid(nu_init)
    goals = SCHEME_GOALS if goals is None else goals
    pulses = default_pulses(scheme, nu_init)
    offs = transition_offsets(scheme)

    pops = np.zeros((grid.size, 6))
    pops[:, :3] = 1.0 / 3.0
    qubit = np.zeros(6)
    qubit[scheme.role_zero] = 1.0  # any ground works; pulses park it in |aux>

    # centers ordered by qubit index: 0, +1, -1, +2, -2, ... (GHz)
    ks = [0]
    for k in range(1, (n_qubits + 1) // 2 + 1):
        ks.extend([k, -k])
    centers = np.array(ks[:n_qubits], dtype=float) * CHANNEL_WIDTH

    pcache: dict[tuple, object] = {}

    def pulse_probs(ip, k, g, x):
        key = (ip, k, g, x)
        if key not in pcache:
            pulse = pulses[ip]
            shifted = replace(pulse, nu_c=pulse.nu_c + k)
            p = transfer_probability(grid + offs[g, x], shifted, (g, x), scheme)
            pcache[key] = p if p.max() >= _P_FLOOR else None
        return pcache[key]

    for pulse_ids, reps, decay in goals:
        init_goal = pulses[pulse_ids[0]].name.startswith("qubit_")
        for _ in range(reps):
            for ip in pulse_ids:
                pulse = pulses[ip]
                grid_active = not (init_goal and nu_init == 0.0)
                for k in centers:
                    if grid_active:
                        for g in range(3):
                            for x in range(3):
                                p = pulse_probs(ip, k, g, x)
                                if p is not None:
                                    _swap(pops, g, x, p)
                    # the qubit ion sits at detuning 0 in channel 0
                    if k == 0.0:
                        _apply_to_single(qubit, pulse, offs, scheme, forced=init_goal and nu_init == 0.0)
                if decay:
                    _decay_inplace(pops, scheme)
                    _decay_single(qubit, scheme)
                if progress is not None:
                    progress()
    prof = PopulationProfile(
        grid,
        pops,
        nu_init,
        {
            "scheme": scheme_hash(scheme),
            "n_qubits": str(n_qubits),
            "qubit_final": ",".join(f"{v:.6e}" for v in qubit),
        },
    )
    return prof


def _apply_to_single(vec: np.ndarray, pulse: BurnPulse, offs, scheme, forced=False):
    for g in range(3):
        for x in range(3):
            if forced:
                p = pulse.design_efficiency if (g, x) == pulse.design_transition else 0.0
            else:
                p = transfer_probability(offs[g, x], pulse, (g, x), scheme)
            if p > 0.0:
                a = vec[g]
                b = vec[3 + x]
                vec[g] = a + p * (b - a)
                vec[3 + x] = b + p * (a - b)


def _decay_single(vec: np.ndarray, scheme: LevelScheme):
    for x in range(3):
        b = scheme.branching_from(x)
        vec[:3] += b * vec[3 + x]
        vec[3 + x] = 0.0


def absorption_spectrum(profile: PopulationProfile, freqs, scheme: LevelScheme):
    """Relative absorption vs frequency (1.0 = unburnt uniform ground states).

    Sums oscillator-strength-weighted ground populations of every transition
    that absorbs at each frequency; the pre-burn uniform profile gives 1.
    """
    offs = transition_offsets(scheme)
    freqs = np.asarray(freqs, dtype=float)
    out = np.zeros_like(freqs)
    for g in range(3):
        for x in range(3):
            d = profile.fold(freqs - offs[g, x])
            pop = np.interp(d, profile.grid, profile.pops[:, g])
            out += scheme.rel_osc_strength[g, x] * pop
    return 3.0 * out / np.sum(scheme.rel_osc_strength)


def compute_max_windows(scheme: LevelScheme, step: float = 5e3, span=( -700e6, 1000e6)):
    """Widest possible transmission windows around the two qubit transitions.

    Every inhomogeneously broadened ion is parked in the ground state whose
    three transitions are jointly as far as possible from the two qubit
    transition frequencies (max-min rule; exact ties go to the lowest ground
    index).  Returns the two zero-absorption intervals as (lo, hi) tuples
    relative to the respective transition frequency.
    """
    offs = transition_offsets(scheme)  # (g, x)
    q0 = 0.0
    q1 = scheme.transition_offset(scheme.role_one, scheme.role_e)
    qlines = np.array([q0, q1])
    d = np.arange(span[0], span[1], step)
    lines = d[None, None, :] + offs[:, :, None]
    dist = np.min(np.abs(lines[:, :, :, None] - qlines[None, None, None, :]), axis=3)
    mind = dist.min(axis=1)                     # (g, npts)
    best = np.argmax(mind - 1e-9 * np.arange(3)[:, None], axis=0)
    absorbed = lines[best, :, np.arange(d.size)].ravel()

    def window(center):
        rel = absorbed - center
        lo = rel[rel < 0].max()
        hi = rel[rel > 0].min()
        return float(lo), float(hi)

    return window(q0), window(q1)
