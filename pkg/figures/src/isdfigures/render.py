"""Figure families and the dispatching render() entry point."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .csvio import read_table, require

__all__ = ["FigureSpec", "render"]

KINDS = ("ordered", "heatmap", "ratio", "curves")

# deterministic output: fixed dpi, no timestamps in the PNG metadata
_SAVE_KW = {"dpi": 150, "metadata": {"Software": "isdsim-figures"}}


@dataclass
class FigureSpec:
    kind: str
    inputs: list
    output: str
    logx: bool = False
    logy: bool = True
    labels: list = field(default_factory=list)
    title: str = ""


def _empty(ax, path):
    warnings.warn(f"no data rows in {path}; rendering empty axes")
    ax.text(0.5, 0.5, "no data", ha="center", va="center", transform=ax.transAxes)


def _ordered(spec: FigureSpec, ax):
    """Error vs ordered simulation number, one curve per input file."""
    for k, path in enumerate(spec.inputs):
        tab = read_table(path)
        if not tab or not len(next(iter(tab.values()))):
            _empty(ax, path)
            continue
        require(tab, ["rank", "error"], path)
        label = spec.labels[k] if k < len(spec.labels) else str(path)
        err = np.maximum(np.sort(tab["error"]), 1e-300)
        ax.step(np.arange(1, err.size + 1), err, where="mid", label=label)
    ax.set_xlabel("ordered simulation number")
    ax.set_ylabel("composed gate error")
    if spec.logy:
        ax.set_yscale("log")
    if spec.labels:
        ax.legend(loc="best", fontsize=8)


def _heatmap(spec: FigureSpec, fig, ax):
    """Error vs (shift, detuning) from an inside-map dump."""
    path = spec.inputs[0]
    tab = read_table(path)
    if not tab or not len(next(iter(tab.values()))):
        _empty(ax, path)
        return
    require(tab, ["shift_hz", "detuning_hz", "error"], path)
    shifts = np.unique(tab["shift_hz"])
    dets = np.unique(tab["detuning_hz"])
    grid = np.full((dets.size, shifts.size), np.nan)
    si = np.searchsorted(shifts, tab["shift_hz"])
    di = np.searchsorted(dets, tab["detuning_hz"])
    grid[di, si] = tab["error"]
    vals = np.log10(np.maximum(grid, 1e-12))
    im = ax.pcolormesh(
        np.arange(shifts.size + 1), np.append(dets, dets[-1] + 1) / 1e6,
        vals, shading="flat", cmap="viridis",
    )
    ticks = np.linspace(0, shifts.size - 1, min(9, shifts.size)).astype(int)
    ax.set_xticks(ticks + 0.5)
    ax.set_xticklabels([f"{shifts[t] / 1e6:g}" for t in ticks], fontsize=7)
    ax.set_xlabel("dipole-dipole shift (MHz, signed-log grid)")
    ax.set_ylabel("detuning (MHz)")
    fig.colorbar(im, ax=ax, label="log10 gate error")


def _ratio(spec: FigureSpec, ax):
    """Full-vs-composed error ratio scatter against the total error."""
    for k, path in enumerate(spec.inputs):
        tab = read_table(path)
        if not tab or not len(next(iter(tab.values()))):
            _empty(ax, path)
            continue
        require(tab, ["total_error", "ratio"], path)
        ratio = np.asarray(
            [float(v) if v == v else np.nan for v in np.atleast_1d(tab["ratio"])]
        )
        label = spec.labels[k] if k < len(spec.labels) else str(path)
        ax.scatter(tab["total_error"], ratio, s=14, alpha=0.5, label=label)
    ax.axhline(1.0, color="k", lw=0.8)
    ax.set_xscale("log")
    ax.set_xlabel("total gate error (full simulation)")
    ax.set_ylabel("full / composed error ratio")
    if spec.labels:
        ax.legend(loc="best", fontsize=8)


def _curves(spec: FigureSpec, ax):
    """Excitation vs detuning for each gate count column."""
    path = spec.inputs[0]
    tab = read_table(path)
    if not tab or not len(next(iter(tab.values()))):
        _empty(ax, path)
        return
    require(tab, ["detuning_hz"], path)
    cols = [c for c in tab if c.startswith("exc_g")]
    if not cols:
        require(tab, ["exc_g1"], path)
    for c in sorted(cols, key=lambda s: int(s[5:])):
        ax.plot(tab["detuning_hz"] / 1e6, np.maximum(tab[c], 1e-300), lw=0.8, label=c)
    ax.set_yscale("log")
    ax.set_xlabel("detuning from the channel center (MHz)")
    ax.set_ylabel("excited population")
    ax.legend(loc="best", fontsize=7, ncol=2)


def render(spec: FigureSpec) -> str:
    """Render one figure; returns the output path."""
    if spec.kind not in KINDS:
        raise ValueError(f"unknown figure kind {spec.kind!r}; choose from {KINDS}")
    if not spec.inputs:
        raise ValueError("at least one input CSV required")
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    try:
        if spec.kind == "ordered":
            _ordered(spec, ax)
        elif spec.kind == "heatmap":
            _heatmap(spec, fig, ax)
        elif spec.kind == "ratio":
            _ratio(spec, ax)
        elif spec.kind == "curves":
            _curves(spec, ax)
        if spec.title:
            ax.set_title(spec.title, fontsize=10)
        fig.tight_layout()
        fig.savefig(spec.output, **_SAVE_KW)
    finally:
        plt.close(fig)
    return spec.output
