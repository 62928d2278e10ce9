"""Figures for the command line report path.

PNG figures are rendered with matplotlib (Agg backend, no display needed);
spectrogram grids can also be exported as a gnuplot script that reads the
CSV written next to it.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_zero_sets", "plot_curves", "plot_grid", "gnuplot_grid_script"]

_MARKERS = ["o", "s", "^", "D", "v", "P"]


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_zero_sets(sets, path, title=None):
    """Scatter of several zero sets; ``sets`` maps a label to complex zeros."""
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    for i, (label, z) in enumerate(sets.items()):
        z = np.asarray(z)
        ax.scatter(z.real, z.imag, s=14, marker=_MARKERS[i % len(_MARKERS)], label=f"{label} ({z.size})", alpha=0.8)
    ax.set_aspect("equal")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.legend(loc="upper right", fontsize=8)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_curves(x_edges, curves, path, ylabel="g", reference=1.0, title=None):
    """Step curves over bins; ``curves`` maps a label to (values, stderr)."""
    x_edges = np.asarray(x_edges, dtype=float)
    mid = 0.5 * (x_edges[:-1] + x_edges[1:])
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (y, se) in curves.items():
        y = np.asarray(y, dtype=float)
        se = np.asarray(se, dtype=float)
        se = np.where(np.isfinite(se), se, 0.0)
        ax.errorbar(mid, y, yerr=se, fmt="o-", ms=3, capsize=2, label=label)
    if reference is not None:
        ax.axhline(reference, color="k", lw=0.7, ls="--")
    ax.set_xlabel("r")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_grid(xs, ys, values, path, xlabel="x", ylabel="xi", title=None):
    """Heat map of a lattice of values (rows follow ``ys``)."""
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    m = ax.pcolormesh(xs, ys, values, shading="nearest")
    fig.colorbar(m, ax=ax)
    ax.set_aspect("equal")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def gnuplot_grid_script(csv_path, png_path, title="", xcol=1, ycol=2, zcol=3):
    """gnuplot commands drawing a (x, y, value) CSV as a PNG heat map."""
    return "\n".join(
        [
            "set terminal pngcairo size 800,700",
            f"set output '{png_path}'",
            "set datafile separator ','",
            f"set title '{title}'",
            "set xlabel 'x'",
            "set ylabel 'xi'",
            "set size ratio -1",
            "set view map",
            f"plot '{csv_path}' every ::1 using {xcol}:{ycol}:{zcol} with image notitle",
            "",
        ]
    )
