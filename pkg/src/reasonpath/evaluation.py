"""Aggregate correctness metrics over judged results.

Plain accuracy works on any mix of formats. Precision and recall apply
to yes/no results with "yes" as the positive class; precision is
reported as absent when nothing was predicted positive. Grouped accuracy
scores a group 1 only when every member is correct, which can never
exceed plain accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import DataError, EmptyResults, MissingGroupKey
from .judging import normalize_answer, strict_match  # noqa: F401  (strict_match is part of this module's API)


@dataclass
class JudgedResult:
    question_id: str
    predicted: str | None
    reference: str
    correct: bool
    format: str
    figure_id: str | None = None
    question_group_id: str | None = None


def accuracy(results: Sequence[JudgedResult]) -> float:
    if not results:
        raise EmptyResults("no results to score")
    return sum(1 for r in results if r.correct) / len(results)


def yesno_precision_recall(results: Sequence[JudgedResult]) -> tuple[float | None, float | None]:
    """Precision and recall with "yes" as the positive class.

    Either value is None when its denominator is empty: precision when
    nothing was predicted "yes", recall when nothing is keyed "yes".
    """
    if not results:
        raise EmptyResults("no results to score")
    for r in results:
        if r.format != "yesno":
            raise DataError(f"precision/recall need yes/no results; {r.question_id} is {r.format}")
    tp = fp = fn = 0
    for r in results:
        pred_yes = r.predicted is not None and normalize_answer(r.predicted) == "yes"
        ref_yes = normalize_answer(r.reference) == "yes"
        if pred_yes and ref_yes:
            tp += 1
        elif pred_yes:
            fp += 1
        elif ref_yes:
            fn += 1
    precision = tp / (tp + fp) if (tp + fp) else None
    recall = tp / (tp + fn) if (tp + fn) else None
    return precision, recall


def grouped_accuracy(results: Sequence[JudgedResult], key: str) -> float:
    """Fraction of groups whose members are all correct.

    ``key`` names the grouping attribute (figure_id or question_group_id);
    every result must carry it.
    """
    if not results:
        raise EmptyResults("no results to score")
    groups: dict[str, bool] = {}
    for r in results:
        group = getattr(r, key, None)
        if group is None:
            raise MissingGroupKey(f"result {r.question_id} has no {key}")
        groups[group] = groups.get(group, True) and r.correct
    return sum(1 for ok in groups.values() if ok) / len(groups)


def metrics_report(results: Sequence[JudgedResult]) -> dict:
    """All metrics the result set supports, as one flat mapping."""
    report: dict = {
        "total": len(results),
        "correct": sum(1 for r in results if r.correct),
        "accuracy": accuracy(results),
    }
    if all(r.format == "yesno" for r in results):
        precision, recall = yesno_precision_recall(results)
        report["precision"] = precision
        report["recall"] = recall
    if all(r.figure_id is not None for r in results):
        report["figure_grouped_accuracy"] = grouped_accuracy(results, "figure_id")
    if all(r.question_group_id is not None for r in results):
        report["question_grouped_accuracy"] = grouped_accuracy(results, "question_group_id")
    return report


def format_table(metrics: dict) -> str:
    """Aligned two-column text rendering of a metrics mapping."""
    rows = []
    for name, value in metrics.items():
        if value is None:
            rendered = "absent"
        elif isinstance(value, float):
            rendered = f"{value:.4f}"
        else:
            rendered = str(value)
        rows.append((str(name), rendered))
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name.ljust(width)}  {value}" for name, value in rows)
