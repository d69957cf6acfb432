"""Command-line entry point.

Subcommands: burn, genmaps, campaign, validate, dump.  Options come from an
optional YAML configuration file plus flag overrides (flags win).  Exit codes:
0 success, 2 usage error, 3 missing dependency artifact, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
import yaml

from . import __version__
from ._kernel import MaxStepsExceeded, StepSizeUnderflow
from .artifacts import (
    get_baseline,
    get_curves,
    get_inside_map,
    get_outside_map,
    get_profile,
    prepare_artifacts,
)
from .bloch import error_from_bloch
from .csvio import config_hash, fmt, write_csv
from .holeburning import compute_max_windows
from .levels import load_level_scheme
from .maps import cache_dir
from .montecarlo import Scenario, per_gate_increment, run_campaign
from .presets import get_preset
from .pulses import TwoColorGate
from .validation import STUDIES, validate

EXIT_USAGE = 2
EXIT_MISSING = 3
EXIT_NUMERICAL = 4


class MissingArtifact(RuntimeError):
    pass


def _add_common(p):
    p.add_argument("--config", help="YAML configuration file (flags override it)")
    p.add_argument("--preset", default=None, help="resolution preset: fast or paper")
    p.add_argument("--cache-dir", default=None, help="artifact cache directory")
    p.add_argument("--out-dir", default=".", help="output directory")
    p.add_argument("--workers", type=int, default=None, help="worker process count")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--quiet", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="isdsim",
        description="Instantaneous-spectral-diffusion statistics for single-ion qubits",
    )
    ap.add_argument("--version", action="version", version=f"isdsim {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("burn", help="create a transmission-window population profile")
    _add_common(p)
    p.add_argument("--nu-init", type=float, default=0.0, help="initialization pulse width (Hz)")

    p = sub.add_parser("genmaps", help="generate the interpolation maps and excitation curves")
    _add_common(p)
    p.add_argument("--nu-init", type=float, default=0.0)
    p.add_argument("--no-windows", action="store_true",
                   help="uniform initial states for the excitation curves")
    p.add_argument("--skip-curves", action="store_true")

    p = sub.add_parser("campaign", help="run a Monte Carlo scenario")
    _add_common(p)
    p.add_argument("--c-total", type=float, default=0.01)
    p.add_argument("--radius", type=float, default=50.0)
    p.add_argument("--no-windows", action="store_true")
    p.add_argument("--nu-init", type=float, default=0.0)
    p.add_argument("-Q", "--q-other", type=int, default=0)
    p.add_argument("-G", "--gates-per-qubit", type=int, default=0)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--mode", choices=("single", "per-gate"), default="single")

    p = sub.add_parser("validate", help="randomized composition-validation studies")
    _add_common(p)
    p.add_argument("--study", choices=STUDIES, required=True)
    p.add_argument("--cases", type=int, default=100)

    p = sub.add_parser("dump", help="dump a map slice or derived table as CSV")
    _add_common(p)
    p.add_argument("--what", choices=("inside", "outside", "curves", "windows", "baseline"),
                   required=True)
    p.add_argument("--state", type=int, default=0, help="initial ground state (inside map)")
    p.add_argument("--nu-init", type=float, default=0.0)
    p.add_argument("--no-windows", action="store_true")
    return ap


def _merge_config(args) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = yaml.safe_load(fh) or {}
    merged = dict(cfg)
    for key, val in vars(args).items():
        if key in ("config", "command") or val is None:
            continue
        merged[key] = val
    merged.setdefault("preset", "fast")
    merged.setdefault("workers", 1)
    merged.setdefault("seed", 0)
    merged.setdefault("out_dir", ".")
    return merged


def _progress(quiet):
    if quiet:
        return None
    state = {"n": 0}

    def tick():
        state["n"] += 1
        if state["n"] % 50 == 0:
            print(f"  ... {state['n']} tasks done", file=sys.stderr, flush=True)

    return tick


def cmd_burn(args) -> int:
    cfg = _merge_config(args)
    res = get_preset(cfg["preset"])
    if cfg.get("nu_init", 0.0) < 0:
        print("error: nu_init must be >= 0", file=sys.stderr)
        return EXIT_USAGE
    scheme = load_level_scheme()
    prof = get_profile(scheme, cfg.get("nu_init", 0.0), res, cfg.get("cache_dir"),
                       progress=_progress(cfg.get("quiet")))
    os.makedirs(cfg["out_dir"], exist_ok=True)
    out = os.path.join(cfg["out_dir"], f"profile_nuinit{int(cfg.get('nu_init', 0.0))}.csv")
    prof.save(out)
    print(out)
    return 0


def cmd_genmaps(args) -> int:
    cfg = _merge_config(args)
    res = get_preset(cfg["preset"])
    scheme = load_level_scheme()
    gate = TwoColorGate.not_gate()
    tick = _progress(cfg.get("quiet"))
    d = cfg.get("cache_dir")
    inside = get_inside_map(scheme, gate, res, d, cfg["workers"], tick)
    outside = get_outside_map(scheme, gate, res, d, cfg["workers"], tick)
    names = [f"inside map: {inside.bloch.shape}", f"outside map: {outside.bloch.shape}"]
    if not cfg.get("skip_curves"):
        profile = None
        if not cfg.get("no_windows"):
            profile = get_profile(scheme, cfg.get("nu_init", 0.0), res, d, tick)
        curves = get_curves(scheme, gate, res, profile, d, cfg["workers"], tick)
        names.append(f"excitation curves: {curves.excitation.shape}")
    for n in names:
        print(n)
    return 0


def _campaign_outputs(cfg, result, tag=""):
    out_dir = cfg["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    conf = dict(result.scenario.config(), preset=cfg["preset"])
    base = os.path.join(out_dir, f"campaign{tag}")
    rows = [
        (
            t.trial_index,
            t.error,
            t.n_ions,
            t.n_inside,
            t.n_outside_active,
            t.site2_count,
            t.ion_error[0] if t.n_retained else 0.0,
            t.ion_channel[0] if t.n_retained else -1,
            t.ion_abs_shift[0] if t.n_retained else 0.0,
            t.ion_distance[0] if t.n_retained else 0.0,
        )
        for t in result.trials
    ]
    write_csv(
        base + "_trials.csv",
        ["trial", "error", "n_ions", "n_inside", "n_outside_active", "n_site2",
         "top_error", "top_channel", "top_abs_shift_hz", "top_distance_nm"],
        rows,
        conf,
    )
    write_csv(
        base + "_ordered.csv",
        ["rank", "error"],
        list(enumerate(result.ordered_errors)),
        conf,
    )
    summary = result.summary()
    summary["config_hash"] = config_hash(conf)
    summary["version"] = __version__
    with open(base + "_summary.json", "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=1)
    return base


def cmd_campaign(args) -> int:
    cfg = _merge_config(args)
    res = get_preset(cfg["preset"])
    scheme = load_level_scheme()
    gate = TwoColorGate.not_gate()
    tick = _progress(cfg.get("quiet"))
    trials = cfg.get("trials") or res.trials
    base_kwargs = dict(
        c_total=cfg.get("c_total", 0.01),
        radius=cfg.get("radius", 50.0),
        use_windows=not cfg.get("no_windows", False),
        nu_init=cfg.get("nu_init", 0.0),
        trials=trials,
        seed=cfg["seed"],
    )
    baseline = get_baseline(scheme, gate, cfg.get("cache_dir"))
    if cfg.get("mode") == "per-gate":
        q = cfg.get("q_other") or 50
        campaigns = []
        for g_count in (0, cfg.get("gates_per_qubit") or 10):
            scen = Scenario(q_other=q if g_count else 0, gates_per_qubit=g_count, **base_kwargs)
            art = prepare_artifacts(scen, res, scheme, gate, cfg.get("cache_dir"),
                                    cfg["workers"], tick)
            campaigns.append(
                run_campaign(scen, art, cfg["workers"], baseline, tick)
            )
            _campaign_outputs(cfg, campaigns[-1], tag=f"_G{g_count}")
        inc = per_gate_increment(campaigns)
        rows = [(gq, med) for gq, med in inc["points"]]
        write_csv(
            os.path.join(cfg["out_dir"], "per_gate_increment.csv"),
            ["gq", "median_error"],
            rows,
            dict(base_kwargs, mode="per-gate"),
        )
        print(json.dumps({"increments": {str(k): v for k, v in inc["increments"].items()},
                          "slope": inc["slope"]}, sort_keys=True))
        return 0
    scen = Scenario(
        q_other=cfg.get("q_other", 0),
        gates_per_qubit=cfg.get("gates_per_qubit", 0),
        **base_kwargs,
    )
    art = prepare_artifacts(scen, res, scheme, gate, cfg.get("cache_dir"),
                            cfg["workers"], tick)
    result = run_campaign(scen, art, cfg["workers"], baseline, tick)
    base = _campaign_outputs(cfg, result)
    print(base + "_summary.json")
    return 0


def cmd_validate(args) -> int:
    cfg = _merge_config(args)
    if cfg.get("cases", 0) < 1:
        print("error: --cases must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    scheme = load_level_scheme()
    gate = TwoColorGate.not_gate()
    results = validate(
        cfg["study"], cfg["cases"], scheme, gate, seed=cfg["seed"],
        workers=cfg["workers"], progress=_progress(cfg.get("quiet")),
    )
    os.makedirs(cfg["out_dir"], exist_ok=True)
    out = os.path.join(cfg["out_dir"], f"validate_{cfg['study']}.csv")
    rows = [
        (i, r.total_error, r.estimated_error,
         r.ratio if r.ratio == r.ratio else "nan",
         int(r.zero_over_zero), int(r.excluded), cfg["study"])
        for i, r in enumerate(results)
    ]
    write_csv(
        out,
        ["case", "total_error", "estimated_error", "ratio", "zero_over_zero",
         "excluded", "study"],
        rows,
        {"study": cfg["study"], "cases": cfg["cases"], "seed": cfg["seed"]},
    )
    ratios = np.array([r.ratio for r in results if not r.excluded])
    print(json.dumps({"file": out, "median_ratio": float(np.median(ratios)),
                      "excluded": int(sum(r.excluded for r in results))}))
    return 0


def cmd_dump(args) -> int:
    cfg = _merge_config(args)
    res = get_preset(cfg["preset"])
    scheme = load_level_scheme()
    gate = TwoColorGate.not_gate()
    d = cfg.get("cache_dir")
    os.makedirs(cfg["out_dir"], exist_ok=True)
    what = cfg["what"]
    out = os.path.join(cfg["out_dir"], f"dump_{what}.csv")
    if what == "windows":
        w0, w1 = compute_max_windows(scheme)
        write_csv(out, ["transition", "lo_hz", "hi_hz"],
                  [("zero_e", w0[0], w0[1]), ("one_e", w1[0], w1[1])], cfg_clean(cfg))
    elif what == "baseline":
        err = get_baseline(scheme, gate, d)
        write_csv(out, ["baseline_error"], [(err,)], cfg_clean(cfg))
    elif what == "inside":
        m = get_inside_map(scheme, gate, res, d, cfg["workers"])
        st = int(cfg.get("state", 0))
        rows = []
        for i, s in enumerate(m.shifts):
            for j, det in enumerate(m.detunings):
                u, v, w = m.bloch[i, j, st]
                rows.append((s, det, u, v, w, error_from_bloch(m.bloch[i, j, st])))
        write_csv(out, ["shift_hz", "detuning_hz", "u", "v", "w", "error"], rows,
                  cfg_clean(cfg))
    elif what == "outside":
        m = get_outside_map(scheme, gate, res, d, cfg["workers"])
        rows = []
        for i, s in enumerate(m.shifts):
            for j, p in enumerate(m.p_grid):
                u, v, w = m.bloch[i, j]
                rows.append((s, p, u, v, w, error_from_bloch(m.bloch[i, j])))
        write_csv(out, ["shift_hz", "excitation", "u", "v", "w", "error"], rows,
                  cfg_clean(cfg))
    elif what == "curves":
        profile = None
        if not cfg.get("no_windows"):
            profile = get_profile(scheme, cfg.get("nu_init", 0.0), res, d)
        c = get_curves(scheme, gate, res, profile, d, cfg["workers"])
        rows = [
            (det, *[c.excitation[g, j] for g in range(c.excitation.shape[0])])
            for j, det in enumerate(c.detunings)
        ]
        write_csv(out, ["detuning_hz"] + [f"exc_g{g+1}" for g in range(c.excitation.shape[0])],
                  rows, cfg_clean(cfg))
    print(out)
    return 0


def cfg_clean(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if k not in ("quiet",)}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    handlers = {
        "burn": cmd_burn,
        "genmaps": cmd_genmaps,
        "campaign": cmd_campaign,
        "validate": cmd_validate,
        "dump": cmd_dump,
    }
    try:
        return handlers[args.command](args)
    except MissingArtifact as exc:
        print(f"error: missing artifact: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (StepSizeUnderflow, MaxStepsExceeded, FloatingPointError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
