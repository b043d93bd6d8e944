"""Figure rendering for run reports: modulus heatmaps, amplitude traces, rates.

All functions write PNG files next to the delimited data they visualize and
never open interactive windows (Agg backend).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .grid import ComplexField, RealField

__all__ = [
    "save_modulus_heatmap",
    "save_amplitude_series",
    "save_rate_plot",
]


def save_modulus_heatmap(field, path, t: float | None = None) -> None:
    """Filled-color map of |u| over the domain."""
    grid = field.grid
    mod = np.abs(field.values) if isinstance(field, ComplexField) else field.values
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    im = ax.imshow(
        mod.T,
        origin="lower",
        extent=(grid.a, grid.b, grid.c, grid.d),
        aspect="equal",
        cmap="viridis",
    )
    fig.colorbar(im, ax=ax, label="|u|")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if t is not None:
        ax.set_title(f"|u| at t = {t:g}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_amplitude_series(times, measured, theory, path, label: str = "measured") -> None:
    """Amplitude trace against the closed-form decay curve."""
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    ax.plot(times, theory, "k-", lw=1.2, label="closed form")
    ax.plot(times, measured, "C0.", ms=2.5, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("A(t)")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_rate_plot(hs, series: dict, path, xlabel: str = "h") -> None:
    """log-log error curves with a second-order guide line."""
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    hs = np.asarray(hs, dtype=float)
    for name, values in series.items():
        ax.loglog(hs, values, "o-", ms=4, label=name)
    anchor = max(max(v) for v in series.values())
    guide = anchor * (hs / hs.max()) ** 2
    ax.loglog(hs, guide, "k--", lw=1, label="order 2")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("error")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
