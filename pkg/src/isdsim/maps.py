"""Interpolation tables replacing per-ion full simulations.

Three artifacts, all persisted to disk keyed by (level scheme, gate,
resolution):

* the inside-channel map: reduced qubit Bloch vector vs (shift, detuning,
  initial ground state) for a driven six-level neighbor;
* the excitation curves: total excited population of a six-level neighbor vs
  its in-channel detuning after each of up to ten NOT gates on its own qubit
  (decay, decoherence and crosstalk included);
* the outside-channel map: qubit Bloch vector vs (shift, prior excitation) for
  an undriven two-level neighbor.

Bloch components, not scalar errors, are interpolated (the composition needs
the full effect); decomposition into rotation + shrinkage happens after
interpolation.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .bloch import TARGET_AFTER_NOT, bloch_vector, decompose_effect, reduce_to_qubit
from .evolve import apply_gate, gate_sequence
from .holeburning import CHANNEL_HI, CHANNEL_LO, PopulationProfile
from .levels import LevelScheme, scheme_hash
from .presets import Resolution
from .pulses import TwoColorGate
from .system import CompositeSystem, IonModel, LindbladParams

__all__ = [
    "ExcitationCurve",
    "IsdMapInside",
    "IsdMapOutside",
    "generate_excitation_curves",
    "generate_inside_map",
    "generate_outside_map",
    "query_inside",
    "query_outside",
    "shift_grid",
]

SHIFT_MIN = 1e3
SHIFT_MAX = 100e6
_SYMLOG_X0 = 1e3
MAP_VERSION = 2

# detuning offsets added around every resonance ridge (Hz); the high-error
# ridges are only a few MHz wide, far below any practical uniform step
RIDGE_OFFSETS = {
    "fast": np.array([0.0, 0.5e6, 1.5e6, 4.0e6, 10.0e6]),
    "paper": np.array([0.0, 0.2e6, 0.6e6, 1.2e6]),
}


def shift_grid(points_per_sign: int) -> np.ndarray:
    pos = np.logspace(np.log10(SHIFT_MIN), np.log10(SHIFT_MAX), points_per_sign)
    return np.concatenate([-pos[::-1], [0.0], pos])


def ridge_detunings(scheme: LevelScheme) -> np.ndarray:
    """Detunings where a gate color is resonant with an available transition.

    For an ion in ground state g, a ridge sits wherever detuning + transition
    offset hits one of the two pulse carriers; the union over the three
    initial states is used for the shared detuning axis.
    """
    ridges = set()
    for c in (0, 1):
        nu_c = scheme.color_frequency(c)
        for g in range(3):
            for x in range(3):
                d = nu_c - scheme.transition_offset(g, x)
                if CHANNEL_LO <= d <= CHANNEL_HI:
                    ridges.add(round(d, 3))
    return np.array(sorted(ridges))


def detuning_grid(scheme: LevelScheme, step: float, preset_name: str) -> np.ndarray:
    """Uniform detuning axis refined with clusters around every ridge."""
    base = np.arange(CHANNEL_LO, CHANNEL_HI + step / 2, step)
    offs = RIDGE_OFFSETS.get(preset_name, RIDGE_OFFSETS["fast"])
    offs = np.unique(np.concatenate([-offs, offs]))
    extra = (ridge_detunings(scheme)[:, None] + offs[None, :]).ravel()
    extra = extra[(extra >= CHANNEL_LO) & (extra <= CHANNEL_HI)]
    return np.unique(np.concatenate([base, extra]))


def _symlog(x):
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.log10(1.0 + np.abs(x) / _SYMLOG_X0)


def _gate_hash(gate: TwoColorGate) -> str:
    h = hashlib.sha256()
    env = gate.envelope
    h.update(np.array([gate.phi0, gate.phi1, gate.theta, env.t_g, env.sigma, env.area]).tobytes())
    return h.hexdigest()[:12]


def _interp_weights(grid, x):
    """Clamped linear interpolation indices and weights along one axis."""
    x = np.clip(x, grid[0], grid[-1])
    hi = np.searchsorted(grid, x, side="right")
    hi = np.clip(hi, 1, grid.size - 1)
    lo = hi - 1
    span = grid[hi] - grid[lo]
    w = np.where(span > 0, (x - grid[lo]) / np.where(span > 0, span, 1.0), 0.0)
    return lo, hi, w


# -- inside-channel map ---------------------------------------------------------


@dataclass
class IsdMapInside:
    shifts: np.ndarray         # (ns,) Hz, signed, includes 0
    detunings: np.ndarray      # (nd,) Hz over the channel
    bloch: np.ndarray          # (ns, nd, 3 states, 3 components)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._coords = _symlog(self.shifts)

    def save(self, path):
        np.savez_compressed(
            path, shifts=self.shifts, detunings=self.detunings, bloch=self.bloch,
            meta=json.dumps(self.meta, sort_keys=True),
        )

    @staticmethod
    def load(path) -> "IsdMapInside":
        with np.load(path) as z:
            return IsdMapInside(
                z["shifts"], z["detunings"], z["bloch"], json.loads(str(z["meta"]))
            )


def _inside_entry(scheme, gate, dnu, delta, state, rtol, atol):
    qubit = IonModel.qubit3(scheme)
    ion = IonModel.six_level(scheme, detuning=delta, initial=int(state))
    shifts = np.array([[0.0, dnu], [dnu, 0.0]])
    system = CompositeSystem(qubit, [ion], shifts_hz=shifts, gate=gate, scheme=scheme)
    rho = apply_gate(system, rtol=rtol, atol=atol, check=False)
    rho2, _ = reduce_to_qubit(rho, 3)
    return bloch_vector(rho2)


_WORKER = {}


def _init_worker(scheme, gate, rtol, atol):
    _WORKER.update(scheme=scheme, gate=gate, rtol=rtol, atol=atol)


def _inside_task(args):
    i, j, dnu, delta = args
    out = np.empty((3, 3))
    for g in range(3):
        out[g] = _inside_entry(
            _WORKER["scheme"], _WORKER["gate"], dnu, delta, g,
            _WORKER["rtol"], _WORKER["atol"],
        )
    return i, j, out


def generate_inside_map(
    scheme: LevelScheme,
    gate: TwoColorGate,
    res: Resolution,
    workers: int = 1,
    progress=None,
) -> IsdMapInside:
    """Simulate the (shift x detuning x initial state) grid of Bloch vectors.

    Each entry runs the NOT gate on the 18-level composite of the
    ISD-isolated qubit and a fully driven six-level neighbor, without decay or
    decoherence.
    """
    shifts = shift_grid(res.shift_points_per_sign)
    detunings = detuning_grid(scheme, res.detuning_step, res.name)
    bloch = np.empty((shifts.size, detunings.size, 3, 3))
    tasks = [
        (i, j, float(s), float(d))
        for i, s in enumerate(shifts)
        for j, d in enumerate(detunings)
    ]
    # zero shift never interacts: fill analytically with the exact target
    for i, j, dnu, delta in tasks:
        if dnu == 0.0:
            bloch[i, j, :, :] = TARGET_AFTER_NOT
    tasks = [t for t in tasks if t[2] != 0.0]
    _run_tasks(tasks, bloch, scheme, gate, res.rtol_maps, res.atol_maps, workers, progress)
    meta = {
        "kind": "inside",
        "version": MAP_VERSION,
        "scheme": scheme_hash(scheme),
        "gate": _gate_hash(gate),
        "resolution": res.name,
        "rtol": res.rtol_maps,
        "atol": res.atol_maps,
    }
    return IsdMapInside(shifts, detunings, bloch, meta)


def _run_tasks(tasks, bloch, scheme, gate, rtol, atol, workers, progress):
    if workers > 1:
        import multiprocessing as mp

        ctx = mp.get_context("fork")
        with ctx.Pool(workers, initializer=_init_worker,
                      initargs=(scheme, gate, rtol, atol)) as pool:
            for i, j, out in pool.imap_unordered(_inside_task, tasks, chunksize=4):
                bloch[i, j] = out
                if progress:
                    progress()
    else:
        _init_worker(scheme, gate, rtol, atol)
        for t in tasks:
            i, j, out = _inside_task(t)
            bloch[i, j] = out
            if progress:
                progress()


class _ExactInsideCache:
    """On-demand full simulations for shifts beyond the tabulated range."""

    def __init__(self, scheme, gate, rtol, atol):
        self.scheme, self.gate = scheme, gate
        self.rtol, self.atol = rtol, atol
        self._cache = {}

    def __call__(self, dnu, delta, state):
        key = (round(float(dnu), 3), round(float(delta), 3), int(state))
        if key not in self._cache:
            self._cache[key] = _inside_entry(
                self.scheme, self.gate, dnu, delta, state, self.rtol, self.atol
            )
        return self._cache[key]


def query_inside_bloch(m: IsdMapInside, dnu, delta, state, exact=None):
    """Bilinearly interpolated Bloch vectors, (n, 3), for array inputs.

    Interpolation runs in (signed-log shift, linear detuning) coordinates.
    Shift magnitudes beyond the tabulated 100 MHz fall back to on-demand exact
    simulations when ``exact`` is provided (and raise otherwise).
    """
    dnu = np.atleast_1d(np.asarray(dnu, dtype=float))
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    state = np.atleast_1d(np.asarray(state, dtype=int))
    if np.any(delta < CHANNEL_LO - 1e-6) or np.any(delta > CHANNEL_HI + 1e-6):
        raise ValueError("detuning outside the frequency channel")
    out = np.empty((dnu.size, 3))
    over = np.abs(dnu) > SHIFT_MAX
    if over.any():
        if exact is None:
            raise ValueError("shift beyond the map range and no exact fallback given")
        for k in np.nonzero(over)[0]:
            out[k] = exact(dnu[k], delta[k], state[k])
    ok = ~over
    if ok.any():
        li, hi, wi = _interp_weights(m._coords, _symlog(dnu[ok]))
        lj, hj, wj = _interp_weights(m.detunings, delta[ok])
        st = state[ok]
        b = m.bloch
        out[ok] = (
            b[li, lj, st] * ((1 - wi) * (1 - wj))[:, None]
            + b[hi, lj, st] * (wi * (1 - wj))[:, None]
            + b[li, hj, st] * ((1 - wi) * wj)[:, None]
            + b[hi, hj, st] * (wi * wj)[:, None]
        )
    return out


def query_inside(m: IsdMapInside, dnu, delta, state, exact=None):
    """ErrorSourceEffect of one inside-channel ion."""
    b = query_inside_bloch(m, dnu, delta, state, exact)[0]
    return decompose_effect(b, TARGET_AFTER_NOT)


# -- excitation curves ----------------------------------------------------------


@dataclass
class ExcitationCurve:
    detunings: np.ndarray      # (nd,)
    excitation: np.ndarray     # (n_gates, nd): after gate 1..n
    meta: dict = field(default_factory=dict)

    def value(self, detuning, n_gates: int):
        row = self.excitation[n_gates - 1]
        d = np.asarray(detuning, dtype=float)
        out = np.interp(d, self.detunings, row)
        return float(out) if out.ndim == 0 else out

    def save(self, path):
        np.savez_compressed(
            path, detunings=self.detunings, excitation=self.excitation,
            meta=json.dumps(self.meta, sort_keys=True),
        )

    @staticmethod
    def load(path) -> "ExcitationCurve":
        with np.load(path) as z:
            return ExcitationCurve(
                z["detunings"], z["excitation"], json.loads(str(z["meta"]))
            )


def _curve_task(args):
    j, delta, probs = args
    scheme, gate = _WORKER["scheme"], _WORKER["gate"]
    ion = IonModel.six_level(scheme, detuning=delta, initial=("mixed_ground", probs))
    system = CompositeSystem(ion, gate=gate, scheme=scheme)
    states = gate_sequence(
        system,
        lindblad=LindbladParams(),
        rtol=_WORKER["rtol"],
        atol=_WORKER["atol"],
        n_gates=_WORKER["n_gates"],
    )
    exc = [float(np.real(np.trace(r[3:, 3:]))) for r in states]
    return j, exc


def generate_excitation_curves(
    scheme: LevelScheme,
    gate: TwoColorGate,
    res: Resolution,
    profile: PopulationProfile | None,
    n_gates: int = 10,
    workers: int = 1,
    progress=None,
) -> ExcitationCurve:
    """Excited population of a six-level ion vs detuning after 1..n gates.

    The ion starts in the profile-weighted mixed ground state at its detuning
    (uniform without windows) and is driven by its own qubit's pulses with
    decay, decoherence and crosstalk included.
    """
    detunings = detuning_grid(scheme, res.excitation_step, res.name)
    if profile is None:
        probs = np.tile(np.ones(3) / 3.0, (detunings.size, 1))
    else:
        probs = profile.ground_probabilities(detunings)
    exc = np.empty((n_gates, detunings.size))
    tasks = [(j, float(d), probs[j]) for j, d in enumerate(detunings)]
    if workers > 1:
        import multiprocessing as mp

        ctx = mp.get_context("fork")
        with ctx.Pool(
            workers, initializer=_init_curve_worker,
            initargs=(scheme, gate, res.rtol_curves, res.atol_curves, n_gates),
        ) as pool:
            for j, vals in pool.imap_unordered(_curve_task, tasks, chunksize=2):
                exc[:, j] = vals
                if progress:
                    progress()
    else:
        _init_curve_worker(scheme, gate, res.rtol_curves, res.atol_curves, n_gates)
        for t in tasks:
            j, vals = _curve_task(t)
            exc[:, j] = vals
            if progress:
                progress()
    meta = {
        "kind": "excitation",
        "version": MAP_VERSION,
        "scheme": scheme_hash(scheme),
        "gate": _gate_hash(gate),
        "resolution": res.name,
        "windows": profile is not None,
        "nu_init": 0.0 if profile is None else profile.nu_init,
    }
    return ExcitationCurve(detunings, exc, meta)


def _init_curve_worker(scheme, gate, rtol, atol, n_gates):
    _WORKER.update(scheme=scheme, gate=gate, rtol=rtol, atol=atol, n_gates=n_gates)


# -- outside-channel map ----------------------------------------------------------


@dataclass
class IsdMapOutside:
    shifts: np.ndarray         # (ns,)
    p_grid: np.ndarray         # (np,) excitation axis, starts at 0
    bloch: np.ndarray          # (ns, np, 3)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._coords = _symlog(self.shifts)

    def save(self, path):
        np.savez_compressed(
            path, shifts=self.shifts, p_grid=self.p_grid, bloch=self.bloch,
            meta=json.dumps(self.meta, sort_keys=True),
        )

    @staticmethod
    def load(path) -> "IsdMapOutside":
        with np.load(path) as z:
            return IsdMapOutside(
                z["shifts"], z["p_grid"], z["bloch"], json.loads(str(z["meta"]))
            )


def generate_outside_map(
    scheme: LevelScheme,
    gate: TwoColorGate,
    res: Resolution,
    workers: int = 1,
    progress=None,
) -> IsdMapOutside:
    """Qubit Bloch vector vs (shift, excitation) of an undriven spectator.

    The two-level neighbor idles in a mixed state with excited population p
    while the NOT gate runs on the qubit (no decay or decoherence).  The
    initial state is diagonal and the neighbor is frozen, so the Bloch vector
    is exactly linear in p: each shift needs one fully excited simulation, and
    the p = 0 row is the unperturbed target exactly.
    """
    shifts = shift_grid(res.shift_points_per_sign)
    p_grid = np.concatenate([[0.0], np.logspace(-9, 0, res.p_points)])
    excited = np.empty((shifts.size, 3))
    qubit = IonModel.qubit3(scheme)
    for i, dnu in enumerate(shifts):
        if dnu == 0.0:
            excited[i] = TARGET_AFTER_NOT
            continue
        ion = IonModel.two_level(1.0)
        system = CompositeSystem(
            qubit, [ion], shifts_hz=np.array([[0.0, dnu], [dnu, 0.0]]),
            gate=gate, scheme=scheme,
        )
        rho = apply_gate(system, rtol=res.rtol_maps, atol=res.atol_maps, check=False)
        rho2, _ = reduce_to_qubit(rho, 3)
        excited[i] = bloch_vector(rho2)
        if progress:
            progress()
    bloch = (
        (1.0 - p_grid)[None, :, None] * TARGET_AFTER_NOT[None, None, :]
        + p_grid[None, :, None] * excited[:, None, :]
    )
    meta = {
        "kind": "outside",
        "version": MAP_VERSION,
        "scheme": scheme_hash(scheme),
        "gate": _gate_hash(gate),
        "resolution": res.name,
        "rtol": res.rtol_maps,
        "atol": res.atol_maps,
    }
    return IsdMapOutside(shifts, p_grid, bloch, meta)


def query_outside_bloch(m: IsdMapOutside, dnu, p):
    """Linearly interpolated Bloch vectors for array inputs.

    Shift magnitudes beyond 100 MHz clamp to the edge column; excitations
    above the tabulated range raise.
    """
    dnu = np.atleast_1d(np.asarray(dnu, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(p < 0.0) or np.any(p > m.p_grid[-1] * (1 + 1e-12)):
        raise ValueError("excitation outside the tabulated range")
    dnu = np.clip(dnu, m.shifts[0], m.shifts[-1])
    li, hi, wi = _interp_weights(m._coords, _symlog(dnu))
    lj, hj, wj = _interp_weights(m.p_grid, p)
    b = m.bloch
    return (
        b[li, lj] * ((1 - wi) * (1 - wj))[:, None]
        + b[hi, lj] * (wi * (1 - wj))[:, None]
        + b[li, hj] * ((1 - wi) * wj)[:, None]
        + b[hi, hj] * (wi * wj)[:, None]
    )


def query_outside(m: IsdMapOutside, dnu, p):
    """ErrorSourceEffect of one outside-channel ion."""
    b = query_outside_bloch(m, dnu, p)[0]
    return decompose_effect(b, TARGET_AFTER_NOT)


# -- persistence ------------------------------------------------------------------


def cache_key(kind: str, scheme: LevelScheme, gate: TwoColorGate, res: Resolution,
              extra: str = "") -> str:
    h = hashlib.sha256(
        f"{kind}|{MAP_VERSION}|{scheme_hash(scheme)}|{_gate_hash(gate)}|"
        f"{res.name}|{res.shift_points_per_sign}|{res.detuning_step}|"
        f"{res.excitation_step}|{res.p_points}|{res.rtol_maps}|{res.atol_maps}|"
        f"{res.rtol_curves}|{res.atol_curves}|{extra}".encode()
    ).hexdigest()[:16]
    return f"{kind}_{h}.npz"


def cache_dir(override=None) -> str:
    path = override or os.environ.get("ISDSIM_CACHE_DIR") or os.path.join(
        os.path.expanduser("~"), ".cache", "isdsim"
    )
    os.makedirs(path, exist_ok=True)
    return path
