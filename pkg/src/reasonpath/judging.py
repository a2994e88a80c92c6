"""Answer extraction and correctness rules.

One normalization code path serves the search goal test, transcript
answer extraction, and scoring, so a path judged correct while being
discovered is judged by identical rules when it is reused.

Per-format rules: mcqa takes the first standalone choice letter; yesno
takes the first "yes"/"no" token; numeric takes the first number and
compares at relative tolerance 1e-4; open compares the text after a
trailing "answer:"-style marker (or the whole text) case-, whitespace-,
and punctuation-insensitively.
"""

from __future__ import annotations

import math
import re
import string
from dataclasses import dataclass

from .tokens import tokenize

_NUMBER = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?")
_ANSWER_MARKER = re.compile(r"(?i)\banswer\b(?:\s+is)?\s*[:\-=]?\s*")
_PUNCT_TABLE = str.maketrans({c: " " for c in string.punctuation})

NUMERIC_REL_TOL = 1e-4


def normalize_answer(text: str) -> str:
    """Lowercase, strip punctuation, and collapse whitespace."""
    return " ".join(text.lower().translate(_PUNCT_TABLE).split())


def strict_match(predicted: str, reference: str) -> bool:
    return normalize_answer(predicted) == normalize_answer(reference)


def answer_tail(text: str) -> str:
    """Text after the last "answer ..." marker, or the whole text."""
    last = None
    for match in _ANSWER_MARKER.finditer(text):
        last = match
    return text[last.end():] if last else text


def extract_choice(text: str, n_choices: int) -> str | None:
    """First standalone letter naming one of the first ``n_choices`` options."""
    for tok in tokenize(answer_tail(text)):
        if len(tok) == 1 and tok.isalpha() and ord(tok) - ord("a") < n_choices:
            return tok.upper()
    return None


def extract_yesno(text: str) -> str | None:
    for tok in tokenize(answer_tail(text)):
        if tok in ("yes", "no"):
            return tok
    return None


def extract_number(text: str) -> float | None:
    match = _NUMBER.search(answer_tail(text))
    return float(match.group()) if match else None


def extract_answer(record, text: str) -> str | None:
    """Pull the record-format-appropriate answer out of a response text."""
    fmt = record.format
    if fmt == "mcqa":
        return extract_choice(text, len(record.choices or []))
    if fmt == "yesno":
        return extract_yesno(text)
    if fmt == "numeric":
        value = extract_number(text)
        return None if value is None else repr(value)
    return answer_tail(text).strip()


@dataclass
class Verdict:
    extracted: str | None
    correct: bool


def judge_answer(record, text: str) -> Verdict:
    """Extract an answer from ``text`` and compare it with the record's key."""
    if record.answer is None:
        raise ValueError(f"record {record.id} has no answer key to judge against")
    extracted = extract_answer(record, text)
    if extracted is None:
        return Verdict(extracted=None, correct=False)

    fmt = record.format
    key = record.answer.strip()
    if fmt == "mcqa":
        correct = extracted.upper() == key.upper()
    elif fmt == "yesno":
        correct = extracted == key.lower()
    elif fmt == "numeric":
        correct = math.isclose(float(extracted), float(key), rel_tol=NUMERIC_REL_TOL, abs_tol=1e-12)
    else:
        correct = strict_match(extracted, key)
    return Verdict(extracted=extracted, correct=correct)
