"""Figure rendering for reports. Matplotlib is imported lazily with the
Agg backend so the CLI works headless and figure bytes stay reproducible
for identical inputs.
"""

from __future__ import annotations

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_seed_map(coordinates, selected_indices, path, title: str = "Seed coverage in PCA space") -> None:
    """Density heatmap of all projected points with selected seeds overlaid in red."""
    plt = _pyplot()
    coords = np.asarray(coordinates, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    hb = ax.hexbin(coords[:, 0], coords[:, 1], gridsize=30, cmap="viridis", mincnt=1)
    fig.colorbar(hb, ax=ax, label="questions per cell")
    picked = coords[list(selected_indices)]
    ax.scatter(picked[:, 0], picked[:, 1], c="red", s=22, zorder=3, label="selected seeds")
    ax.set_xlabel("component 1")
    ax.set_ylabel("component 2")
    ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata={"Software": None})
    plt.close(fig)


def render_metric_bars(values: dict, path, title: str) -> None:
    """Bar chart of named ratio metrics, for eval and consistency reports."""
    plt = _pyplot()
    names = [k for k, v in values.items() if isinstance(v, (int, float)) and v is not None]
    heights = [float(values[k]) for k in names]
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(names)), 4.0))
    ax.bar(range(len(names)), heights, color="#4878cf")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("ratio")
    ax.set_title(title)
    for i, h in enumerate(heights):
        ax.text(i, h + 0.01, f"{h:.3f}", ha="center", va="bottom", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata={"Software": None})
    plt.close(fig)
