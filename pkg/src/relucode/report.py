"""Figure rendering for the report-style CLI outputs.

Everything draws through the Agg backend into PNG files next to the CSVs
they illustrate. PNG output here is deterministic (fixed metadata, no
timestamps), which the command idempotence contract relies on.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_METADATA = {"Software": "relucode"}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=110, metadata=_METADATA)
    plt.close(fig)
    return path


def save_census_figure(curves, path) -> Path:
    """curves: list of (label, summary rows); rows are
    (epoch, distinct, distinct_correct, dataset_size)."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, rows in curves:
        rows = list(rows)
        epochs = [r[0] for r in rows]
        ax.plot(epochs, [r[1] for r in rows], marker=".", label=f"{label}: all")
        if any(r[2] for r in rows):
            ax.plot(
                epochs,
                [r[2] for r in rows],
                marker=".",
                linestyle="--",
                label=f"{label}: correct",
            )
    ax.set_xlabel("epoch")
    ax.set_ylabel("distinct codes")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)


def save_training_figure(metrics, path) -> Path:
    """metrics: (epoch, loss, accuracy) rows from one training run."""
    rows = list(metrics)
    epochs = [r[0] for r in rows]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(epochs, [r[1] for r in rows], color="tab:red", label="train loss")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss", color="tab:red")
    ax2 = ax.twinx()
    ax2.plot(epochs, [r[2] for r in rows], color="tab:blue", label="train accuracy")
    ax2.set_ylabel("accuracy", color="tab:blue")
    ax2.set_ylim(0.0, 1.02)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)


def save_grid_figure(grid, path) -> Path:
    """Cell-id raster with ids shuffled once so neighbors get distinct colors."""
    n = max(grid.distinct_codes, 1)
    perm = np.random.default_rng(0).permutation(n)
    img = perm[grid.cell_id_grid]
    (x_lo, x_hi), (y_lo, y_hi) = grid.bounds
    fig, ax = plt.subplots(figsize=(5.4, 5.0))
    ax.imshow(
        img.T,
        origin="lower",
        extent=(x_lo, x_hi, y_lo, y_hi),
        interpolation="nearest",
        cmap="nipy_spectral",
    )
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(f"{grid.distinct_codes} cells at resolution {grid.resolution}")
    fig.tight_layout()
    return _save(fig, path)
