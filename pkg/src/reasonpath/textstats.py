"""Readability and lexical statistics for question text.

Word tokenization is lowercase and splits on any run of non-alphanumeric
characters; sentences are split on runs of '.', '!', '?'. Text with no
terminator counts as a single sentence. Both rules are deliberately
simple so every downstream number is reproducible from the raw string.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

from .errors import EmptyText

_WORD_SPLIT = re.compile(r"[^a-z0-9]+")
_SENTENCE_SPLIT = re.compile(r"[.!?]+")
_VOWEL_GROUP = re.compile(r"[aeiouy]+")


@dataclass(frozen=True)
class TextMetrics:
    """Sentence and syllable statistics for one piece of text."""

    asl: float  # average sentence length, words per sentence
    asw: float  # average syllables per word
    word_count: int
    sentence_count: int


def words(text: str) -> list[str]:
    """Lowercased alphanumeric word tokens."""
    return [w for w in _WORD_SPLIT.split(text.lower()) if w]


def count_syllables(word: str) -> int:
    """Estimate syllables as maximal vowel-group runs (a, e, i, o, u, y).

    A trailing lone 'e' is treated as silent and dropped unless it is the
    word's only vowel group. Every word counts as at least one syllable.
    """
    groups = _VOWEL_GROUP.findall(word.lower())
    n = len(groups)
    if n > 1 and groups[-1] == "e" and word.lower().endswith("e"):
        n -= 1
    return max(1, n)


def sentences(text: str) -> list[str]:
    """Sentence segments that contain at least one word."""
    return [part for part in _SENTENCE_SPLIT.split(text) if words(part)]


def text_metrics(text: str) -> TextMetrics:
    """Compute ASL and ASW for ``text``.

    Raises EmptyText when no words survive tokenization.
    """
    ws = words(text)
    if not ws:
        raise EmptyText("text has no words after tokenization")
    sents = sentences(text)
    total_syllables = sum(count_syllables(w) for w in ws)
    return TextMetrics(
        asl=len(ws) / len(sents),
        asw=total_syllables / len(ws),
        word_count=len(ws),
        sentence_count=len(sents),
    )


def flesch_reading_ease(metrics: TextMetrics) -> float:
    """Reading-ease score 206.835 - 1.015*ASL - 84.6*ASW, unclamped."""
    return 206.835 - 1.015 * metrics.asl - 84.6 * metrics.asw


def shannon_entropy(text: str) -> float:
    """Entropy of the word-frequency distribution, in bits.

    Zero exactly when the text repeats a single word type.
    """
    ws = words(text)
    if not ws:
        raise EmptyText("text has no words after tokenization")
    counts = Counter(ws)
    total = len(ws)
    return -sum((c / total) * math.log2(c / total) for c in counts.values())
