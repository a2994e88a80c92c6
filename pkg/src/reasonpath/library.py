"""Persistent store of solved questions and similarity-based path retrieval.

The file format is UTF-8 JSON lines: a header object carrying the schema
version, the embedding dimension, and the normalization statistics the
stored feature vectors were z-scored with, then one flat object per
entry. Floats survive a save/load round trip bit-exactly because they
are serialized with Python's shortest-repr decimal form.

Retrieval ranks entries by a hybrid score: alpha times the L2 distance
between z-scored difficulty vectors minus (1 - alpha) times the cosine
similarity of the question embeddings. Smaller is better; ties break
toward the lower question id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .backends import Backend, cosine_similarity
from .errors import (
    DataError,
    DimensionMismatch,
    EmptyLibrary,
    SchemaVersionMismatch,
    StorageError,
)
from .features import NormalizationStats, apply_normalization, compute_dfv

SCHEMA_VERSION = 1


@dataclass
class RetrievalConfig:
    alpha: float = 0.5
    top_k: int = 1

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")


@dataclass
class LibraryEntry:
    question_id: str
    question: str
    dfv_raw: tuple[float, ...]
    dfv_normalized: tuple[float, ...]
    embedding: list[float]
    path: tuple[str, ...]
    answer: str | None
    attempts: int
    created_at: str
    backend: str

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "question": self.question,
            "dfv_raw": list(self.dfv_raw),
            "dfv_normalized": list(self.dfv_normalized),
            "embedding": list(self.embedding),
            "path": list(self.path),
            "answer": self.answer,
            "attempts": self.attempts,
            "created_at": self.created_at,
            "backend": self.backend,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LibraryEntry":
        try:
            return cls(
                question_id=str(data["question_id"]),
                question=str(data["question"]),
                dfv_raw=tuple(float(x) for x in data["dfv_raw"]),
                dfv_normalized=tuple(float(x) for x in data["dfv_normalized"]),
                embedding=[float(x) for x in data["embedding"]],
                path=tuple(str(p) for p in data["path"]),
                answer=data.get("answer"),
                attempts=int(data["attempts"]),
                created_at=str(data["created_at"]),
                backend=str(data["backend"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise StorageError(f"bad library entry: {exc}") from exc


class Library:
    """In-memory view of a path library plus its header metadata."""

    def __init__(self, stats: NormalizationStats, dim: int, entries: Iterable[LibraryEntry] = ()):
        self.stats = stats
        self.dim = int(dim)
        self.entries: list[LibraryEntry] = []
        for entry in entries:
            self.append(entry)

    def append(self, entry: LibraryEntry) -> None:
        if len(entry.embedding) != self.dim:
            raise DimensionMismatch(
                f"entry {entry.question_id} embedding has dim {len(entry.embedding)}, library is {self.dim}"
            )
        if not entry.path:
            raise DataError(f"entry {entry.question_id} has an empty path")
        self.entries.append(entry)

    def ids(self) -> set[str]:
        return {entry.question_id for entry in self.entries}

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def save(self, path) -> None:
        header = {"schema": SCHEMA_VERSION, "dim": self.dim, "stats": self.stats.to_dict()}
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
                for entry in self.entries:
                    fh.write(json.dumps(entry.to_dict(), sort_keys=True, separators=(",", ":")) + "\n")
        except OSError as exc:
            raise StorageError(f"cannot write library {path}: {exc}") from exc

    @classmethod
    def load(cls, path) -> "Library":
        try:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise StorageError(f"cannot read library {path}: {exc}") from exc
        if not lines:
            raise StorageError(f"library {path} is empty; expected a header line")
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise StorageError(f"library {path} header is not valid JSON: {exc}") from exc
        schema = header.get("schema")
        if schema != SCHEMA_VERSION:
            raise SchemaVersionMismatch(
                f"library {path} has schema {schema!r}; this build reads schema {SCHEMA_VERSION}"
            )
        try:
            dim = int(header["dim"])
        except (KeyError, TypeError, ValueError) as exc:
            raise StorageError(f"library {path} header has no usable dim: {exc}") from exc
        library = cls(NormalizationStats.from_dict(header.get("stats", {})), dim)
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StorageError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            library.append(LibraryEntry.from_dict(payload))
        return library


def hss(
    query_dfv: Sequence[float],
    query_embedding,
    entry: LibraryEntry,
    alpha: float,
) -> float:
    """Hybrid score: alpha * difficulty distance - (1 - alpha) * cosine similarity."""
    q = np.asarray(query_dfv, dtype=np.float64)
    e = np.asarray(entry.dfv_normalized, dtype=np.float64)
    if q.shape != e.shape:
        raise DimensionMismatch(f"difficulty vectors disagree: {q.shape} vs {e.shape}")
    emb = np.asarray(getattr(query_embedding, "values", query_embedding), dtype=np.float64)
    if emb.shape[0] != len(entry.embedding):
        raise DimensionMismatch(
            f"embeddings disagree: query dim {emb.shape[0]} vs entry dim {len(entry.embedding)}"
        )
    distance = float(np.linalg.norm(q - e))
    similarity = cosine_similarity(emb, np.asarray(entry.embedding, dtype=np.float64))
    return alpha * distance - (1.0 - alpha) * similarity


class ScoredEntry(NamedTuple):
    score: float
    entry: LibraryEntry


def rank(
    query_dfv: Sequence[float],
    query_embedding,
    entries: Sequence[LibraryEntry],
    alpha: float,
    top_k: int,
) -> list[ScoredEntry]:
    """Exhaustive scan, ascending by score with ties broken by question id."""
    if not entries:
        raise EmptyLibrary("cannot retrieve from an empty library")
    scored = [
        (hss(query_dfv, query_embedding, entry, alpha), entry.question_id, entry)
        for entry in entries
    ]
    scored.sort(key=lambda item: (item[0], item[1]))
    return [ScoredEntry(score, entry) for score, _, entry in scored[:top_k]]


def retrieve(record, library: Library, backend: Backend, config: RetrievalConfig) -> list[ScoredEntry]:
    """Score ``record`` against every library entry and return the best matches.

    The query's difficulty vector is normalized with the statistics the
    library was built with, so both sides live in the same space.
    """
    if len(library) == 0:
        raise EmptyLibrary("cannot retrieve from an empty library")
    query_dfv = apply_normalization(compute_dfv(record), library.stats)
    query_embedding = backend.embed(record.question)
    return rank(query_dfv, query_embedding, library.entries, config.alpha, config.top_k)
