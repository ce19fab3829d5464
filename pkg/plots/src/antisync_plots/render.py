"""Render figure analogs from the simulator's CSV outputs.

Four figure ids are supported:

* ``fig2``  two panels, q_m(t) and q_d(t), from ``trajectory.csv``;
* ``fig4``  sin of the phase sum and difference overlaid, from ``phases.csv``;
* ``fig5``  log10 of the phase-sum variance vs time, one curve per input
  file (e.g. the two bath temperatures), from ``variance*.csv``;
* ``fig6``  two panels, locked phase sum and Gaussian discord vs drive
  amplitude, from ``sweep.csv``.

Rendering is read-only over its inputs and never writes a blank image:
missing columns and empty tables are reported before the output file is
created.  Series longer than ``MAX_POINTS`` are decimated for plotting only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

MAX_POINTS = 100_000

FIGURE_COLUMNS = {
    "fig2": ("t", "q_m", "q_d"),
    "fig4": ("t", "sin_sum", "sin_diff"),
    "fig5": ("t", "var_phase_sum"),
    "fig6": ("eta", "locked_phase_sum", "D_G"),
}


class RenderError(Exception):
    """Bad figure request or unusable input table."""


@dataclass(frozen=True)
class FigureSpec:
    """One rendering job: input CSV path(s), figure id, output image path
    and optional axis-label overrides."""

    inputs: tuple
    figure: str
    output: str
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.figure not in FIGURE_COLUMNS:
            raise RenderError(
                f"unknown figure id {self.figure!r} "
                f"(known: {', '.join(sorted(FIGURE_COLUMNS))})")
        if not self.inputs:
            raise RenderError("at least one input CSV is required")


def load_table(path, required_columns) -> dict:
    """Columns of a CSV file as float arrays, validated against the header."""
    path = Path(path)
    if not path.exists():
        raise RenderError(f"input file not found: {path}")
    with open(path) as fh:
        header = fh.readline().strip()
        has_rows = bool(fh.readline().strip())
    if not header:
        raise RenderError(f"empty input: {path}")
    names = header.split(",")
    missing = [c for c in required_columns if c not in names]
    if missing:
        raise RenderError(f"{path}: missing column(s) {', '.join(missing)} "
                          f"(header has: {header})")
    if not has_rows:
        raise RenderError(f"empty input: {path} has a header but no rows")
    data = np.atleast_2d(np.genfromtxt(path, delimiter=",", skip_header=1))
    if data.shape[1] != len(names):
        raise RenderError(f"{path}: ragged rows (expected {len(names)} columns)")
    return {name: data[:, i] for i, name in enumerate(names)}


def _decimate(*arrays):
    n = arrays[0].size
    if n <= MAX_POINTS:
        return arrays
    step = int(np.ceil(n / MAX_POINTS))
    return tuple(a[::step] for a in arrays)


def _save(fig, spec):
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def _series_label(path):
    stem = Path(path).stem
    return stem if stem else str(path)


def render(spec: FigureSpec):
    """Render one figure and return the written path."""
    renderer = {"fig2": _render_fig2, "fig4": _render_fig4,
                "fig5": _render_fig5, "fig6": _render_fig6}[spec.figure]
    return renderer(spec)


def _labels(spec, default_x, default_y):
    return (spec.labels.get("xlabel", default_x),
            spec.labels.get("ylabel", default_y))


def _render_fig2(spec):
    table = load_table(spec.inputs[0], FIGURE_COLUMNS["fig2"])
    t, q_m, q_d = _decimate(table["t"], table["q_m"], table["q_d"])
    xlabel, _ = _labels(spec, "scaled time", None)
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
    ax1.plot(t, q_m, lw=0.6)
    ax1.set_ylabel(spec.labels.get("ylabel", "q_m"))
    ax2.plot(t, q_d, lw=0.6, color="tab:orange")
    ax2.set_ylabel("q_d")
    ax2.set_xlabel(xlabel)
    fig.suptitle("Mechanical and atomic quadrature evolution")
    return _save(fig, spec)


def _render_fig4(spec):
    table = load_table(spec.inputs[0], FIGURE_COLUMNS["fig4"])
    t, s_sum, s_diff = _decimate(table["t"], table["sin_sum"], table["sin_diff"])
    xlabel, ylabel = _labels(spec, "scaled time", "sin of phase combination")
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(t, s_diff, lw=0.5, label="sin(phase difference)")
    ax.plot(t, s_sum, lw=1.2, label="sin(phase sum)")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_ylim(-1.1, 1.1)
    ax.legend(loc="upper right")
    return _save(fig, spec)


def _render_fig5(spec):
    fig, ax = plt.subplots(figsize=(8, 4))
    plotted = False
    for path in spec.inputs:
        table = load_table(path, FIGURE_COLUMNS["fig5"])
        t, var = table["t"], table["var_phase_sum"]
        good = np.isfinite(var) & (var > 0)
        if not good.any():
            plt.close(fig)
            raise RenderError(f"{path}: no positive finite variance values")
        t, logvar = _decimate(t[good], np.log10(var[good]))
        ax.plot(t, logvar, lw=0.8, label=_series_label(path))
        plotted = True
    if not plotted:
        plt.close(fig)
        raise RenderError("no usable variance input")
    xlabel, ylabel = _labels(spec, "scaled time", "log10 phase-sum variance")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(loc="best")
    return _save(fig, spec)


def _render_fig6(spec):
    table = load_table(spec.inputs[0], FIGURE_COLUMNS["fig6"])
    eta = table["eta"]
    locked = table["locked_phase_sum"]
    d_g = table["D_G"]
    good = np.isfinite(locked) & np.isfinite(d_g)
    if not good.any():
        raise RenderError(f"{spec.inputs[0]}: no finite sweep rows")
    xlabel, _ = _labels(spec, "drive amplitude", None)
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    ax1.plot(eta[good], locked[good], "o-", ms=4)
    ax1.set_ylabel("locked phase sum")
    ax2.plot(eta[good], d_g[good], "s-", ms=4, color="tab:red")
    ax2.set_ylabel("Gaussian discord")
    ax2.set_xlabel(xlabel)
    return _save(fig, spec)
