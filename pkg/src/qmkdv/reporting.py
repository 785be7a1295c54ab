"""Delimited report output and optional figure rendering.

Every subcommand emits CSV (comma separated, dot decimal, one header row,
`#`-prefixed metadata lines on top).  When a figures directory is supplied,
the same data is rendered to PNG files next to the delimited output; the
CSV remains the primary interface.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIG_SIZE = (5.4, 3.4)
DPI = 150


def write_csv(path, header: list[str], rows, meta: dict | None = None):
    """Rows of python scalars; floats through repr for stable bytes."""
    lines = []
    for key, val in (meta or {}).items():
        lines.append(f"# {key}={val}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_cell(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)


def _cell(x) -> str:
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    return str(x)


def _new_axes(xlabel: str, ylabel: str, title: str):
    fig, ax = plt.subplots(figsize=FIG_SIZE)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=10)
    ax.grid(True, which="both", alpha=0.3)
    return fig, ax


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return Path(path)


def drift_figure(path, times, drift_series: dict[str, list[float]]):
    fig, ax = _new_axes("t", "relative drift", "conservation monitors")
    for label, values in drift_series.items():
        ax.semilogy(times, np.maximum(np.abs(values), 1e-18), label=label)
    ax.legend(fontsize=8)
    return _finish(fig, path)


def ratio_figure(path, ns, ratios, slope: float, predicted: float):
    fig, ax = _new_axes("N", "ratio", "trilinear ratio growth")
    ax.loglog(ns, ratios, "o", label="measured")
    anchor = ratios[0] / ns[0] ** slope
    ax.loglog(ns, anchor * np.asarray(ns, dtype=float) ** slope, "-",
              label=f"fit slope {slope:.3f}")
    ax.loglog(
        ns,
        ratios[0] * (np.asarray(ns, dtype=float) / ns[0]) ** predicted,
        "--",
        label=f"predicted {predicted:g}",
    )
    ax.legend(fontsize=8)
    return _finish(fig, path)


def calibration_figure(path, grid, drifts, best: float, best_drift: float):
    fig, ax = _new_axes("correction coefficient", "max relative drift",
                        "energy-coefficient calibration")
    grid = np.asarray(grid)
    drifts = np.asarray(drifts)
    order = np.argsort(grid)
    ax.semilogy(grid[order], drifts[order], ".-", lw=0.8)
    ax.axvline(best, color="tab:red", lw=1.0, label=f"best {best:.4g}")
    ax.plot([best], [best_drift], "r*", ms=10)
    ax.legend(fontsize=8)
    return _finish(fig, path)


def comparability_figure(path, ratios, lo: float = 0.5, hi: float = 1.5):
    fig, ax = _new_axes("modified energy / dyadic proxy", "count",
                        "comparability band")
    ax.hist(ratios, bins=30)
    ax.axvline(lo, color="tab:red", lw=1.0)
    ax.axvline(hi, color="tab:red", lw=1.0)
    return _finish(fig, path)


def parabolic_figure(path, eps_values, distances):
    fig, ax = _new_axes("damping strength", "sup-in-time distance",
                        "vanishing-dissipation gap")
    ax.loglog(eps_values, distances, "o-")
    return _finish(fig, path)


def norm_history_figure(path, times, series: dict[str, list[float]],
                        ylabel: str = "value", title: str = "history"):
    fig, ax = _new_axes("t", ylabel, title)
    for label, values in series.items():
        ax.plot(times, values, label=label)
    ax.legend(fontsize=8)
    return _finish(fig, path)
