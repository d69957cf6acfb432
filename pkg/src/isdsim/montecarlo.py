"""Monte Carlo pipeline over randomized qubit surroundings.

One trial: dope a sphere, draw frequencies, assign channels and initial
states, look up every ion's rotation + shrinkage (inside-channel map for
channel 0, excitation curve + outside-channel map for ions whose own qubits
performed gates), and compose all effects against the error-free Bloch vector.
Trials use counter-based random streams keyed by (campaign seed, trial index),
so results are independent of worker count and scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bloch import (
    TARGET_AFTER_NOT,
    bloch_vector,
    compose_sorted,
    decompose_many,
    error_from_bloch,
    gate_error,
    reduce_to_qubit,
)
from .evolve import apply_gate
from .holeburning import PopulationProfile
from .lattice import (
    UnitCell,
    assign_frequencies,
    assign_initial_states,
    dope_sphere,
    load_unit_cell,
    trial_rng,
)
from .levels import LevelScheme
from .maps import (
    ExcitationCurve,
    IsdMapInside,
    IsdMapOutside,
    _ExactInsideCache,
    query_inside_bloch,
    query_outside_bloch,
)
from .pulses import TwoColorGate
from .system import CompositeSystem, IonModel, LindbladParams

__all__ = [
    "CampaignResult",
    "Scenario",
    "TrialResult",
    "baseline_error",
    "per_gate_increment",
    "run_campaign",
    "run_trial",
    "truncation_analysis",
]

RETAIN_ERROR_FLOOR = 1e-18
RETAIN_MAX = 8192


@dataclass(frozen=True)
class Scenario:
    """One Monte Carlo configuration."""

    c_total: float
    radius: float = 50.0
    use_windows: bool = True
    nu_init: float = 0.0
    q_other: int = 0           # other qubits whose gates pre-excite spectators
    gates_per_qubit: int = 0   # NOT gates performed on each of them
    trials: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.q_other < 0:
            raise ValueError("q_other must be >= 0")
        if self.gates_per_qubit < 0:
            raise ValueError("gates_per_qubit must be >= 0")

    def config(self) -> dict:
        return {
            "c_total": self.c_total,
            "radius": self.radius,
            "use_windows": self.use_windows,
            "nu_init": self.nu_init,
            "q_other": self.q_other,
            "gates_per_qubit": self.gates_per_qubit,
            "trials": self.trials,
            "seed": self.seed,
        }


@dataclass
class TrialResult:
    trial_index: int
    error: float                  # composed ISD error of the full surrounding
    bloch: np.ndarray
    n_ions: int
    n_inside: int
    n_outside_active: int
    site2_count: int
    # retained per-ion contributions, descending individual error
    ion_error: np.ndarray
    ion_channel: np.ndarray
    ion_abs_shift: np.ndarray
    ion_distance: np.ndarray
    ion_shrink: np.ndarray
    ion_angle: np.ndarray
    ion_axis: np.ndarray

    @property
    def n_retained(self) -> int:
        return self.ion_error.size


@dataclass
class Artifacts:
    """Precomputed tables a scenario needs."""

    cell: UnitCell
    inside: IsdMapInside
    outside: IsdMapOutside | None = None
    curves: ExcitationCurve | None = None
    profile: PopulationProfile | None = None
    exact_inside: object = None


def run_trial(scenario: Scenario, trial_index: int, art: Artifacts) -> TrialResult:
    rng = trial_rng(scenario.seed, trial_index)
    s = dope_sphere(art.cell, scenario.c_total, scenario.radius, seed=rng)
    assign_frequencies(s, seed=rng)
    profile = art.profile if scenario.use_windows else None
    if scenario.use_windows and profile is None:
        raise ValueError("windows scenario requires a population profile")
    assign_initial_states(s, profile, seed=rng)

    inside = s.channels == 0
    n_inside = int(inside.sum())
    vec_list, ch_list, shift_list, dist_list = [], [], [], []
    dists = s.distances()
    if n_inside:
        v = query_inside_bloch(
            art.inside,
            s.shifts_to_qubit[inside],
            s.in_channel_detunings[inside],
            s.initial_states[inside],
            exact=art.exact_inside,
        )
        vec_list.append(v)
        ch_list.append(s.channels[inside])
        shift_list.append(np.abs(s.shifts_to_qubit[inside]))
        dist_list.append(dists[inside])

    n_active = 0
    if scenario.q_other > 0 and scenario.gates_per_qubit > 0:
        if art.curves is None or art.outside is None:
            raise ValueError("scenario with pre-excited spectators needs curves and outside map")
        active = (s.channels >= 1) & (s.channels <= scenario.q_other)
        n_active = int(active.sum())
        if n_active:
            p = art.curves.value(s.in_channel_detunings[active], scenario.gates_per_qubit)
            p = np.clip(p, 0.0, art.outside.p_grid[-1])
            v = query_outside_bloch(art.outside, s.shifts_to_qubit[active], p)
            vec_list.append(v)
            ch_list.append(s.channels[active])
            shift_list.append(np.abs(s.shifts_to_qubit[active]))
            dist_list.append(dists[active])

    if vec_list:
        vecs = np.concatenate(vec_list)
        chans = np.concatenate(ch_list)
        shifts = np.concatenate(shift_list)
        rads = np.concatenate(dist_list)
    else:
        vecs = np.zeros((0, 3))
        chans = np.zeros(0, dtype=int)
        shifts = np.zeros(0)
        rads = np.zeros(0)

    shrink, angle, axis = decompose_many(vecs, TARGET_AFTER_NOT)
    a = compose_sorted(shrink, angle, axis, TARGET_AFTER_NOT)
    err = error_from_bloch(a)

    ion_err = 0.5 * (1.0 - vecs @ TARGET_AFTER_NOT) if vecs.size else np.zeros(0)
    keep = ion_err > RETAIN_ERROR_FLOOR
    order = np.argsort(-ion_err[keep], kind="stable")[:RETAIN_MAX]
    idx = np.nonzero(keep)[0][order]
    return TrialResult(
        trial_index=trial_index,
        error=err,
        bloch=a,
        n_ions=s.n_ions,
        n_inside=n_inside,
        n_outside_active=n_active,
        site2_count=s.site2_count,
        ion_error=ion_err[idx],
        ion_channel=chans[idx].astype(np.int32),
        ion_abs_shift=shifts[idx],
        ion_distance=rads[idx],
        ion_shrink=shrink[idx],
        ion_angle=angle[idx],
        ion_axis=axis[idx],
    )


@dataclass
class CampaignResult:
    scenario: Scenario
    trials: list
    baseline: float | None = None

    @property
    def errors(self) -> np.ndarray:
        return np.array([t.error for t in self.trials])

    @property
    def ordered_errors(self) -> np.ndarray:
        return np.sort(self.errors)

    def quantiles(self, qs=(0.05, 0.25, 0.5, 0.75, 0.95)) -> dict:
        e = self.errors
        return {f"q{int(q * 100):02d}": float(np.quantile(e, q)) for q in qs}

    def median(self) -> float:
        return float(np.median(self.errors))

    def median_ci(self, n_boot: int = 400) -> tuple[float, float]:
        """Bootstrap confidence interval (2.5/97.5%) on the median."""
        rng = np.random.Generator(np.random.Philox(key=np.uint64(self.scenario.seed + 1)))
        e = self.errors
        meds = np.median(
            e[rng.integers(0, e.size, size=(n_boot, e.size))], axis=1
        )
        return float(np.quantile(meds, 0.025)), float(np.quantile(meds, 0.975))

    def fraction_exceeding(self, threshold: float) -> float:
        return float(np.mean(self.errors > threshold))

    def summary(self) -> dict:
        out = {
            "scenario": self.scenario.config(),
            "trials": len(self.trials),
            "median": self.median(),
            "median_ci": self.median_ci(),
            **self.quantiles(),
            "mean_ions_inside": float(np.mean([t.n_inside for t in self.trials])),
            "mean_ions_outside_active": float(
                np.mean([t.n_outside_active for t in self.trials])
            ),
        }
        if self.baseline is not None:
            out["baseline"] = self.baseline
            for frac_name, frac in (("10pct", 0.1), ("100pct", 1.0)):
                out[f"fraction_above_{frac_name}_of_baseline"] = self.fraction_exceeding(
                    frac * self.baseline
                )
        return out


_CAMPAIGN = {}


def _campaign_task(idx):
    return run_trial(_CAMPAIGN["scenario"], idx, _CAMPAIGN["artifacts"])


def run_campaign(
    scenario: Scenario,
    artifacts: Artifacts,
    workers: int = 1,
    baseline: float | None = None,
    progress=None,
) -> CampaignResult:
    """Run all trials of the scenario; results are merged by trial index."""
    indices = list(range(scenario.trials))
    results = [None] * scenario.trials
    if workers > 1:
        import multiprocessing as mp

        ctx = mp.get_context("fork")
        _CAMPAIGN.update(scenario=scenario, artifacts=artifacts)
        try:
            with ctx.Pool(workers) as pool:
                for res in pool.imap_unordered(_campaign_task, indices, chunksize=1):
                    results[res.trial_index] = res
                    if progress:
                        progress()
        finally:
            _CAMPAIGN.clear()
    else:
        for i in indices:
            results[i] = run_trial(scenario, i, artifacts)
            if progress:
                progress()
    return CampaignResult(scenario, results, baseline)


def _recompose(trial: TrialResult, mask: np.ndarray) -> float:
    a = compose_sorted(
        trial.ion_shrink[mask],
        trial.ion_angle[mask],
        trial.ion_axis[mask],
        TARGET_AFTER_NOT,
    )
    return error_from_bloch(a)


def truncation_analysis(result: CampaignResult, mode: str, values) -> np.ndarray:
    """Mean fraction of the composed error captured by a subset of ions.

    ``mode`` is "top_n" (the N ions with the largest individual errors) or
    "radius" (ions within r_max of the qubit, in nm).  Fractions are measured
    against recomposition from all retained ions, so the full subset gives
    exactly 1.
    """
    if mode not in ("top_n", "radius"):
        raise ValueError("mode must be 'top_n' or 'radius'")
    fractions = np.empty((len(result.trials), len(values)))
    for ti, t in enumerate(result.trials):
        ref = _recompose(t, np.ones(t.n_retained, dtype=bool))
        for vi, v in enumerate(values):
            if mode == "top_n":
                mask = np.zeros(t.n_retained, dtype=bool)
                mask[: int(v)] = True  # contributions are stored sorted by error
            else:
                mask = t.ion_distance <= v
            e = _recompose(t, mask)
            fractions[ti, vi] = 1.0 if ref == 0.0 else e / ref
    return fractions.mean(axis=0)


def per_gate_increment(campaigns: list) -> dict:
    """Error added per gate operation on another qubit.

    Takes campaigns at the same concentration but different G*Q; returns the
    per-campaign increments (median error minus the G*Q = 0 median, divided by
    G*Q) and the linear-fit slope of median error vs G*Q.
    """
    pts = []
    base = 0.0
    for c in campaigns:
        gq = c.scenario.q_other * c.scenario.gates_per_qubit
        pts.append((gq, c.median()))
        if gq == 0:
            base = c.median()
    if len({gq for gq, _ in pts if gq > 0}) < 1 or len(pts) < 2:
        raise ValueError("need campaigns at >= 2 distinct G*Q values")
    increments = {
        gq: (med - base) / gq for gq, med in pts if gq > 0
    }
    xs = np.array([p[0] for p in pts], dtype=float)
    ys = np.array([p[1] for p in pts], dtype=float)
    slope = float(np.polyfit(xs, ys, 1)[0]) if len(pts) >= 2 else math.nan
    return {"increments": increments, "slope": slope, "points": pts}


def baseline_error(
    scheme: LevelScheme,
    gate: TwoColorGate,
    rtol: float = 1e-10,
    atol: float = 1e-10,
) -> float:
    """NOT error of the six-level qubit from decay, decoherence and crosstalk.

    This is the no-ISD reference the campaign statistics are compared against.
    """
    qubit = IonModel.six_level(scheme, initial="plus_i", crosstalk=True)
    system = CompositeSystem(qubit, gate=gate, scheme=scheme)
    rho = apply_gate(system, lindblad=LindbladParams(), rtol=rtol, atol=atol, check=False)
    rho2, _ = reduce_to_qubit(rho, 6)
    target = np.array([1.0, -1j]) / math.sqrt(2.0)
    return gate_error(rho2, target)
