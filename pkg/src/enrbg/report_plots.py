"""Matplotlib rendering of evaluation figures to image files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_autocorrelation_plot(series, path, null_bound: float | None = None) -> None:
    """Plot lagged autocorrelation coefficients, optionally with a null band."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(series.lags, series.coefficients, ".-", color="tab:blue",
            linewidth=0.8, markersize=3)
    if null_bound is not None:
        ax.axhline(null_bound, color="red", linestyle="--", alpha=0.7,
                   label=f"null bound ±{null_bound:.2e}")
        ax.axhline(-null_bound, color="red", linestyle="--", alpha=0.7)
        ax.legend()
    ax.set_xlabel("Lag")
    ax.set_ylabel("Autocorrelation coefficient")
    ax.set_title("Bitstream autocorrelation")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_histogram_plot(counts, path) -> None:
    """Plot byte-value occurrence counts against the uniform expectation."""
    counts = np.asarray(counts)
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.bar(np.arange(counts.size), counts, width=1.0, color="tab:blue", alpha=0.8)
    total = counts.sum()
    if total:
        ax.axhline(total / counts.size, color="red", linestyle="--", alpha=0.7,
                   label="uniform expectation")
        ax.legend()
    ax.set_xlabel("Byte value")
    ax.set_ylabel("Frequency")
    ax.set_title("Byte-value frequency distribution")
    ax.set_xlim(-1, counts.size)
    ax.grid(True, alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
