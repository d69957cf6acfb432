"""Randomized harness comparing full composite simulations with the
independent-error-source composition.

Three studies: separating the shift-induced error from internal crosstalk,
from decay/decoherence, and from the shift errors of other ions (2 to 5 ions).
Each case runs (a) the full simulation with all effects at once, (b) the
isolated-effect simulations, and (c) the composition of (b) applied to the
complementary-error Bloch vector, and reports the ratio of the two errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bloch import (
    TARGET_AFTER_NOT,
    bloch_vector,
    decompose_effect,
    error_from_bloch,
    reduce_to_qubit,
)
from .evolve import apply_gate
from .levels import LevelScheme
from .pulses import TwoColorGate
from .system import CompositeSystem, IonModel, LindbladParams

__all__ = ["CaseResult", "RandomSystemSpec", "random_system", "two_ion_case", "validate"]

STUDIES = ("crosstalk", "decay", "multi2", "multi3", "multi4", "multi5")
DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class RandomSystemSpec:
    """One randomized case: ion kinds, detunings, shifts, populations."""

    kinds: tuple               # "driven3" | "excited2" per ion
    detunings: tuple           # Hz (used by driven ions)
    excited_pops: tuple        # initial excited population (2-level ions)
    shifts: np.ndarray         # (N+1, N+1) Hz, index 0 = qubit
    ground_splitting: float    # Hz (crosstalk study)
    t1: float                  # s (decay study)
    seed: int


def _log_uniform(rng, lo, hi, size=None):
    return 10.0 ** rng.uniform(math.log10(lo), math.log10(hi), size)


def random_system(seed: int, n_ions: int) -> RandomSystemSpec:
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    kinds = tuple(
        "driven3" if rng.random() < 0.5 else "excited2" for _ in range(n_ions)
    )
    detunings = tuple(float(v) for v in _log_uniform(rng, 1e3, 1e8, n_ions))
    pops = tuple(float(v) for v in _log_uniform(rng, 1e-9, 1e-4, n_ions))
    n1 = n_ions + 1
    shifts = np.zeros((n1, n1))
    for a in range(n1):
        for b in range(a + 1, n1):
            shifts[a, b] = shifts[b, a] = _log_uniform(rng, 1e2, 1e7)
    splitting = float(_log_uniform(rng, 1e5, 1e8))
    t1 = float(_log_uniform(rng, 1e-7, 1.0))
    return RandomSystemSpec(kinds, detunings, pops, shifts, splitting, t1, seed)


def _make_ion(spec: RandomSystemSpec, i: int, splitting: float, crosstalk: bool) -> IonModel:
    if spec.kinds[i] == "driven3":
        return IonModel.three_level(
            splitting, detuning=spec.detunings[i], initial="plus_i", crosstalk=crosstalk
        )
    return IonModel.two_level(spec.excited_pops[i])


def _qubit_error_and_bloch(system, lindblad, rtol, atol):
    rho = apply_gate(system, lindblad=lindblad, rtol=rtol, atol=atol, check=False)
    rho2, _ = reduce_to_qubit(rho, system.qubit.dim)
    return bloch_vector(rho2)


def _sub_shifts(shifts, keep):
    idx = np.asarray(keep, dtype=int)
    return shifts[np.ix_(idx, idx)]


@dataclass
class CaseResult:
    seed: int
    total_error: float
    estimated_error: float
    ratio: float
    zero_over_zero: bool
    excluded: bool


def run_case(
    study: str,
    spec: RandomSystemSpec,
    scheme: LevelScheme,
    gate: TwoColorGate,
    rtol: float = 1e-10,
    atol: float = 1e-10,
) -> CaseResult:
    split = spec.ground_splitting
    n = len(spec.kinds)
    target = TARGET_AFTER_NOT

    def run(qubit_ct: bool, ion_ct: bool, keep_ions, lindblad=None):
        qubit = IonModel.three_level(split, initial="plus_i", crosstalk=qubit_ct)
        ions = [_make_ion(spec, i, split, ion_ct) for i in keep_ions]
        sh = _sub_shifts(spec.shifts, [0] + [i + 1 for i in keep_ions])
        system = CompositeSystem(qubit, ions, shifts_hz=sh, gate=gate)
        return _qubit_error_and_bloch(system, lindblad, rtol, atol)

    if study == "crosstalk":
        a_full = run(True, True, [0])
        a_isd = run(False, False, [0])
        a_comp = run(True, True, [])
        effects = [decompose_effect(a_isd, target)]
    elif study == "decay":
        lb = LindbladParams(t1=spec.t1, t2=2.0 * spec.t1)
        a_full = run(False, False, [0], lindblad=lb)
        a_isd = run(False, False, [0])
        a_comp = run(False, False, [], lindblad=lb)
        effects = [decompose_effect(a_isd, target)]
    elif study.startswith("multi"):
        a_full = run(False, False, list(range(n)))
        effects = [
            decompose_effect(run(False, False, [i]), target) for i in range(n)
        ]
        a_comp = target
    else:
        raise ValueError(f"unknown study {study!r}")

    from .bloch import qbies_compose

    a_est = qbies_compose(effects, a_comp)
    e_full = error_from_bloch(a_full)
    e_est = error_from_bloch(a_est)
    ratio, zz, excluded = ratio_convention(e_full, e_est)
    return CaseResult(spec.seed, e_full, e_est, ratio, zz, excluded)


def ratio_convention(e_full: float, e_est: float):
    """(ratio, zero_over_zero, excluded): 0/0 counts as 1, tiny denominators
    with a non-vanishing numerator are excluded from statistics."""
    zz = e_full < DENOM_FLOOR and e_est < DENOM_FLOOR
    excluded = (not zz) and e_est < DENOM_FLOOR
    ratio = 1.0 if zz else (math.nan if excluded else e_full / e_est)
    return ratio, zz, excluded


def validate(
    study: str,
    cases: int,
    scheme: LevelScheme,
    gate: TwoColorGate,
    seed: int = 0,
    rtol: float = 1e-10,
    atol: float = 1e-10,
    workers: int = 1,
    progress=None,
) -> list[CaseResult]:
    """Run one Appendix-style study; returns per-case results in seed order."""
    if cases < 1:
        raise ValueError("cases must be >= 1")
    if study not in STUDIES:
        raise ValueError(f"study must be one of {STUDIES}")
    n_ions = 1 if study in ("crosstalk", "decay") else int(study[-1])
    specs = [random_system(seed * 1_000_003 + i, n_ions) for i in range(cases)]
    args = [(study, sp, scheme, gate, rtol, atol) for sp in specs]
    if workers > 1:
        import multiprocessing as mp

        ctx = mp.get_context("fork")
        with ctx.Pool(workers) as pool:
            out = [None] * cases
            for i, res in pool.imap_unordered(_case_star, list(enumerate(args))):
                out[i] = res
                if progress:
                    progress()
            return out
    out = []
    for a in args:
        out.append(run_case(*a))
        if progress:
            progress()
    return out


def _case_star(iargs):
    i, args = iargs
    return i, run_case(*args)


def two_ion_case(
    scheme: LevelScheme,
    gate: TwoColorGate,
    detunings: tuple[float, float],
    shifts: tuple[float, float],
    ion_ion_shift: float = 0.0,
    rtol: float = 1e-10,
    atol: float = 1e-10,
    six_level: bool = False,
):
    """Full two-ion simulation vs composition of the two single-ion runs.

    Returns (full error, composed error).  Used for the detuning/shift grid
    validation of the composition method.
    """
    target = TARGET_AFTER_NOT

    def make_ion(i):
        if six_level:
            return IonModel.six_level(scheme, detuning=detunings[i], initial="zero")
        return IonModel.three_level(
            scheme, detuning=detunings[i], initial="plus_i"
        )

    qubit = IonModel.qubit3(scheme)
    s1, s2 = shifts
    full_shifts = np.array(
        [[0.0, s1, s2], [s1, 0.0, ion_ion_shift], [s2, ion_ion_shift, 0.0]]
    )
    system = CompositeSystem(
        qubit, [make_ion(0), make_ion(1)], shifts_hz=full_shifts, gate=gate, scheme=scheme
    )
    a_full = _qubit_error_and_bloch(system, None, rtol, atol)

    effects = []
    for i, s in enumerate(shifts):
        sh = np.array([[0.0, s], [s, 0.0]])
        sys_i = CompositeSystem(qubit, [make_ion(i)], shifts_hz=sh, gate=gate, scheme=scheme)
        effects.append(decompose_effect(_qubit_error_and_bloch(sys_i, None, rtol, atol), target))

    from .bloch import qbies_compose

    a_est = qbies_compose(effects, target)
    return error_from_bloch(a_full), error_from_bloch(a_est)
