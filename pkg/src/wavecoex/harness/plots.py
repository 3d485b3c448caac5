"""Optional SVG plots for scenario outputs.

matplotlib is imported lazily so headless metric runs never touch it.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import numpy as np

from .metrics import MetricRecord

__all__ = ["plot_curves", "plot_rd_map"]


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_curves(
    path: str | Path,
    records: list[MetricRecord],
    x_coord: str = "snr_db",
    log_y: bool = True,
) -> None:
    """One line per (metric, remaining-coordinate) combination against x_coord."""
    plt = _pyplot()
    series: dict[tuple, list[tuple[float, float]]] = defaultdict(list)
    for r in records:
        if x_coord not in r.coords:
            continue
        key_coords = tuple(
            f"{k}={v}" for k, v in sorted(r.coords.items()) if k != x_coord
        )
        series[(r.metric,) + key_coords].append((float(r.coords[x_coord]), r.value))
    fig, ax = plt.subplots(figsize=(7, 5))
    for key, pts in sorted(series.items()):
        pts.sort()
        xs, ys = zip(*pts)
        ax.plot(xs, ys, marker="o", label=" ".join(key))
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel(x_coord)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_rd_map(path: str | Path, power: np.ndarray) -> None:
    """Range-Doppler power heat map in dB, Doppler shifted to center zero."""
    plt = _pyplot()
    shifted = np.fft.fftshift(power, axes=0)
    floor = shifted.max() * 1e-12 + 1e-300
    db = 10.0 * np.log10(np.maximum(shifted, floor))
    fig, ax = plt.subplots(figsize=(7, 5))
    k = power.shape[0]
    im = ax.imshow(
        db,
        aspect="auto",
        origin="lower",
        extent=(0, power.shape[1], -(k // 2), k - k // 2),
    )
    ax.set_xlabel("range bin")
    ax.set_ylabel("doppler bin")
    fig.colorbar(im, ax=ax, label="power [dB]")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
