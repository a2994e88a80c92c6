"""The five-dimensional difficulty descriptor for a question.

Dimensions, in order: reading-ease score, word-distribution entropy,
clause length (average sentence length), edge-pixel density, and
distinct-color ratio. Records without an image carry zeros in the two
visual dimensions so the vector keeps a fixed length for distance
computations. Z-score statistics are fitted over a declared reference
population with the population standard deviation; dimensions with zero
spread are flagged degenerate and normalize to 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .canny import color_diversity, edge_pixel_density, load_rgb
from .errors import MissingStats, StorageError, TooFewSamples
from .textstats import flesch_reading_ease, shannon_entropy, text_metrics

DIMENSION_NAMES = ("fre", "entropy", "clc", "edge_density", "color_diversity")
NUM_DIMENSIONS = len(DIMENSION_NAMES)


@dataclass
class DifficultyFeatureVector:
    fre: float
    entropy: float
    clc: float
    edge_density: float
    color_diversity: float
    normalized: tuple[float, ...] | None = None

    def raw(self) -> tuple[float, ...]:
        return (self.fre, self.entropy, self.clc, self.edge_density, self.color_diversity)


@dataclass
class NormalizationStats:
    """Per-dimension mean and population standard deviation."""

    means: tuple[float, ...]
    stds: tuple[float, ...]
    degenerate: tuple[bool, ...]

    def to_dict(self) -> dict:
        return {
            "means": list(self.means),
            "stds": list(self.stds),
            "degenerate": list(self.degenerate),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NormalizationStats":
        try:
            return cls(
                means=tuple(float(x) for x in data["means"]),
                stds=tuple(float(x) for x in data["stds"]),
                degenerate=tuple(bool(x) for x in data["degenerate"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise StorageError(f"bad normalization stats payload: {exc}") from exc

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "NormalizationStats":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except OSError as exc:
            raise StorageError(f"cannot read stats file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise StorageError(f"stats file {path} is not valid JSON: {exc}") from exc


def compute_features(text: str, image: np.ndarray | None = None) -> DifficultyFeatureVector:
    """Assemble the five raw features for question text and an optional image."""
    metrics = text_metrics(text)
    if image is not None:
        edge = edge_pixel_density(image)
        colors = color_diversity(image)
    else:
        edge = 0.0
        colors = 0.0
    return DifficultyFeatureVector(
        fre=flesch_reading_ease(metrics),
        entropy=shannon_entropy(text),
        clc=metrics.asl,
        edge_density=edge,
        color_diversity=colors,
    )


def compute_dfv(record) -> DifficultyFeatureVector:
    """Compute features for a dataset record, loading its image if it has one."""
    image = load_rgb(record.image) if record.image else None
    return compute_features(record.question, image)


def fit_normalization(dfvs: Iterable[DifficultyFeatureVector]) -> NormalizationStats:
    """Fit per-dimension z-score statistics over a reference population."""
    rows = np.array([d.raw() for d in dfvs], dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] < 2:
        raise TooFewSamples("need at least 2 vectors to fit normalization stats")
    means = rows.mean(axis=0)
    stds = rows.std(axis=0)  # population std
    degenerate = stds == 0.0
    return NormalizationStats(
        means=tuple(float(m) for m in means),
        stds=tuple(float(s) for s in stds),
        degenerate=tuple(bool(d) for d in degenerate),
    )


def apply_normalization(
    dfv: DifficultyFeatureVector | Sequence[float], stats: NormalizationStats
) -> tuple[float, ...]:
    """Z-score a raw vector; degenerate dimensions map to 0."""
    if stats is None:
        raise MissingStats("normalization stats are required")
    raw = dfv.raw() if isinstance(dfv, DifficultyFeatureVector) else tuple(dfv)
    out = []
    for x, mean, std, dead in zip(raw, stats.means, stats.stds, stats.degenerate):
        out.append(0.0 if dead else (x - mean) / std)
    return tuple(out)


def normalize_dfv(dfv: DifficultyFeatureVector, stats: NormalizationStats) -> DifficultyFeatureVector:
    """Return a copy of ``dfv`` with its normalized field filled in."""
    return DifficultyFeatureVector(*dfv.raw(), normalized=apply_normalization(dfv, stats))
