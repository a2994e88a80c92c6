"""Diverse seed selection and PCA projection over feature vectors.

Selection is greedy farthest-point sampling in whatever space the caller
provides; feed it z-scored vectors so no single dimension dominates the
distances. The first pick is the point farthest from the centroid and
every later pick maximizes its minimum distance to the points already
chosen. All ties break toward the lowest index, which makes the whole
procedure deterministic without a seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, TooFewSamples


@dataclass
class SeedSelection:
    """Indices in greedy pick order plus the minimum pairwise distance achieved."""

    indices: list[int]
    min_pairwise_distance: float


@dataclass
class PcaProjection:
    coordinates: np.ndarray  # (n, d)
    explained_variance: np.ndarray  # (d,)
    components: np.ndarray  # (d, dim), orthonormal rows


def max_min_sample(vectors, k: int) -> SeedSelection:
    """Greedy max-min selection of ``min(k, n)`` points."""
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise EmptyInput("no vectors to sample from")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n = arr.shape[0]
    target = min(k, n)

    centroid = arr.mean(axis=0)
    first = int(np.argmax(np.linalg.norm(arr - centroid, axis=1)))
    chosen = [first]
    taken = np.zeros(n, dtype=bool)
    taken[first] = True
    min_dist = np.linalg.norm(arr - arr[first], axis=1)

    while len(chosen) < target:
        candidates = np.where(taken, -np.inf, min_dist)
        pick = int(np.argmax(candidates))
        chosen.append(pick)
        taken[pick] = True
        min_dist = np.minimum(min_dist, np.linalg.norm(arr - arr[pick], axis=1))

    return SeedSelection(indices=chosen, min_pairwise_distance=_min_pairwise(arr, chosen))


def _min_pairwise(arr: np.ndarray, indices: list[int]) -> float:
    if len(indices) < 2:
        return 0.0
    pts = arr[indices]
    best = np.inf
    for i in range(len(pts) - 1):
        d = np.linalg.norm(pts[i + 1 :] - pts[i], axis=1).min()
        best = min(best, float(d))
    return best


def pca_project(vectors, d: int = 2) -> PcaProjection:
    """Project mean-centered vectors onto the top-d principal axes.

    Eigenvectors come from the population covariance; each one is flipped
    so its largest-magnitude loading is positive, which pins the sign.
    """
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 2:
        raise TooFewSamples("need at least 2 vectors for PCA")
    dim = arr.shape[1]
    if not 1 <= d <= dim:
        raise ValueError(f"target dims must be in [1, {dim}], got {d}")

    centered = arr - arr.mean(axis=0)
    cov = centered.T @ centered / arr.shape[0]
    eigvals, eigvecs = np.linalg.eigh(cov)  # ascending
    order = np.arange(dim)[::-1][:d]
    components = eigvecs[:, order].T.copy()
    for row in components:
        if row[int(np.argmax(np.abs(row)))] < 0:
            row *= -1.0
    return PcaProjection(
        coordinates=centered @ components.T,
        explained_variance=eigvals[order].copy(),
        components=components,
    )
