"""Cached generation of the derived artifacts (profiles, maps, curves, baseline).

Everything is keyed by the level scheme, gate parameters and resolution, so a
rerun with the same configuration is a cache hit.  The cache directory comes
from ISDSIM_CACHE_DIR or ~/.cache/isdsim.
"""

from __future__ import annotations

import json
import os

import numpy as np

from . import maps as maps_mod
from .holeburning import PopulationProfile, make_grid, run_scheme
from .levels import LevelScheme, load_level_scheme, scheme_hash
from .maps import (
    ExcitationCurve,
    IsdMapInside,
    IsdMapOutside,
    _ExactInsideCache,
    cache_dir,
    cache_key,
    generate_excitation_curves,
    generate_inside_map,
    generate_outside_map,
)
from .montecarlo import Artifacts, Scenario, baseline_error
from .lattice import load_unit_cell
from .presets import Resolution, get_preset
from .pulses import TwoColorGate

__all__ = ["get_baseline", "get_curves", "get_inside_map", "get_outside_map",
           "get_profile", "prepare_artifacts"]


def get_profile(
    scheme: LevelScheme,
    nu_init: float,
    res: Resolution,
    directory=None,
    progress=None,
) -> PopulationProfile:
    d = cache_dir(directory)
    key = cache_key("profile", scheme, TwoColorGate.not_gate(), res,
                    extra=f"{nu_init}|{res.burn_step}|{res.burn_fine_step}")
    path = os.path.join(d, key.replace(".npz", ".csv"))
    if os.path.exists(path):
        return PopulationProfile.load(path)
    grid = make_grid(nu_init, res.burn_step, res.burn_fine_step)
    prof = run_scheme(scheme, nu_init, grid=grid, progress=progress)
    prof.save(path)
    return prof


def get_inside_map(scheme, gate, res, directory=None, workers=1, progress=None) -> IsdMapInside:
    d = cache_dir(directory)
    path = os.path.join(d, cache_key("inside", scheme, gate, res))
    if os.path.exists(path):
        return IsdMapInside.load(path)
    m = generate_inside_map(scheme, gate, res, workers=workers, progress=progress)
    m.save(path)
    return m


def get_outside_map(scheme, gate, res, directory=None, workers=1, progress=None) -> IsdMapOutside:
    d = cache_dir(directory)
    path = os.path.join(d, cache_key("outside", scheme, gate, res))
    if os.path.exists(path):
        return IsdMapOutside.load(path)
    m = generate_outside_map(scheme, gate, res, workers=workers, progress=progress)
    m.save(path)
    return m


def get_curves(
    scheme, gate, res, profile: PopulationProfile | None,
    directory=None, workers=1, progress=None,
) -> ExcitationCurve:
    d = cache_dir(directory)
    extra = "uniform" if profile is None else f"nu_init={profile.nu_init}"
    path = os.path.join(d, cache_key("curves", scheme, gate, res, extra=extra))
    if os.path.exists(path):
        return ExcitationCurve.load(path)
    c = generate_excitation_curves(
        scheme, gate, res, profile, workers=workers, progress=progress
    )
    c.save(path)
    return c


def get_baseline(scheme, gate, directory=None) -> float:
    d = cache_dir(directory)
    path = os.path.join(d, cache_key("baseline", scheme, gate, get_preset("fast")))
    path = path.replace(".npz", ".json")
    if os.path.exists(path):
        with open(path) as fh:
            return json.load(fh)["error"]
    err = baseline_error(scheme, gate)
    with open(path, "w") as fh:
        json.dump({"error": err}, fh)
    return err


def prepare_artifacts(
    scenario: Scenario,
    res: Resolution,
    scheme: LevelScheme | None = None,
    gate: TwoColorGate | None = None,
    directory=None,
    workers: int = 1,
    progress=None,
) -> Artifacts:
    """Load or generate everything the scenario's trials will query."""
    scheme = scheme or load_level_scheme()
    gate = gate or TwoColorGate.not_gate()
    cell = load_unit_cell()
    profile = None
    if scenario.use_windows:
        profile = get_profile(scheme, scenario.nu_init, res, directory, progress)
    inside = get_inside_map(scheme, gate, res, directory, workers, progress)
    outside = curves = None
    if scenario.q_other > 0 and scenario.gates_per_qubit > 0:
        outside = get_outside_map(scheme, gate, res, directory, workers, progress)
        curves = get_curves(scheme, gate, res, profile, directory, workers, progress)
    exact = _ExactInsideCache(scheme, gate, res.rtol_maps, res.atol_maps)
    return Artifacts(
        cell=cell, inside=inside, outside=outside, curves=curves,
        profile=profile, exact_inside=exact,
    )
