"""Step-by-step execution of reasoning paths against a backend.

A path runs in order; every step's prompt carries the question, the
image when there is one, and the full transcript of earlier steps. Paths
that do not end in an answer step get one appended, so every transcript
finishes with extractable answer text.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from .backends import Backend, GenerationParams, eval_params
from .dataset import DatasetRecord
from .errors import EmptyDataset, ExtractionFailed, StorageError
from .judging import extract_answer, judge_answer
from .library import Library, RetrievalConfig, retrieve
from .prompts import DIRECT_KEY, PromptTemplateSet, step_history
from .search import ANSWER_FUNCTION, DEFAULT_BUDGETS, format_path, scenario_key

CONSISTENCY_PATH = ("RR", "OA", "SR", "RR", "OA")
TRANSITION_CLASSES = (
    "correct_then_correct",
    "correct_then_wrong",
    "wrong_then_correct",
    "wrong_then_wrong",
)
DIRECT_BUDGET = 400


@dataclass
class TranscriptStep:
    function: str
    text: str
    token_count: int


@dataclass
class ExecutionTranscript:
    question_id: str
    path: tuple[str, ...]
    steps: list[TranscriptStep]
    final_text: str
    extracted: str | None
    retrieved_from: str | None = None
    retrieval_score: float | None = None

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "path": list(self.path),
            "steps": [
                {"function": s.function, "text": s.text, "token_count": s.token_count}
                for s in self.steps
            ],
            "final_text": self.final_text,
            "extracted": self.extracted,
            "retrieved_from": self.retrieved_from,
            "retrieval_score": self.retrieval_score,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExecutionTranscript":
        try:
            return cls(
                question_id=str(data["question_id"]),
                path=tuple(str(p) for p in data["path"]),
                steps=[
                    TranscriptStep(str(s["function"]), str(s["text"]), int(s["token_count"]))
                    for s in data["steps"]
                ],
                final_text=str(data["final_text"]),
                extracted=data.get("extracted"),
                retrieved_from=data.get("retrieved_from"),
                retrieval_score=data.get("retrieval_score"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise StorageError(f"bad transcript payload: {exc}") from exc


def load_transcripts(path) -> list[ExecutionTranscript]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise StorageError(f"cannot read transcripts {path}: {exc}") from exc
    out = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            out.append(ExecutionTranscript.from_dict(json.loads(line)))
        except json.JSONDecodeError as exc:
            raise StorageError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
    return out


def execute_path(
    record: DatasetRecord,
    path: Sequence[str],
    backend: Backend,
    templates: PromptTemplateSet | None = None,
    params: GenerationParams | None = None,
    budgets: dict[str, int] | None = None,
) -> ExecutionTranscript:
    """Run ``path`` step by step and extract the answer from the final step.

    Raises ExtractionFailed (carrying the transcript) when the final
    answer text has nothing parseable for the record's format.
    """
    path = tuple(path)
    if not path:
        raise ValueError("path must not be empty")
    templates = templates or PromptTemplateSet.default()
    params = params or eval_params()
    budgets = budgets or DEFAULT_BUDGETS
    if path[-1] != ANSWER_FUNCTION:
        path = path + (ANSWER_FUNCTION,)

    steps: list[TranscriptStep] = []
    for i, fn in enumerate(path):
        history = step_history(record, fn, [(s.function, s.text) for s in steps], templates)
        generated = backend.generate(
            history,
            replace(params, max_tokens=budgets[fn]),
            scenario=scenario_key(record.id, path[: i + 1]),
        )
        steps.append(TranscriptStep(function=fn, text=generated.text, token_count=generated.token_count))

    final_text = steps[-1].text
    extracted = extract_answer(record, final_text)
    transcript = ExecutionTranscript(
        question_id=record.id, path=path, steps=steps,
        final_text=final_text, extracted=extracted,
    )
    if extracted is None:
        raise ExtractionFailed(
            f"record {record.id}: no parseable {record.format} answer in the final step",
            transcript=transcript,
        )
    return transcript


def execute_direct(
    record: DatasetRecord,
    backend: Backend,
    templates: PromptTemplateSet | None = None,
    params: GenerationParams | None = None,
) -> ExecutionTranscript:
    """Answer with one direct prompt and no reasoning path."""
    templates = templates or PromptTemplateSet.default()
    params = params or eval_params()
    history = step_history(record, DIRECT_KEY, [], templates)
    generated = backend.generate(
        history,
        replace(params, max_tokens=DIRECT_BUDGET),
        scenario=f"{record.id}/{DIRECT_KEY}",
    )
    extracted = extract_answer(record, generated.text)
    transcript = ExecutionTranscript(
        question_id=record.id,
        path=(DIRECT_KEY,),
        steps=[TranscriptStep(DIRECT_KEY, generated.text, generated.token_count)],
        final_text=generated.text,
        extracted=extracted,
    )
    if extracted is None:
        raise ExtractionFailed(
            f"record {record.id}: no parseable {record.format} answer in the direct reply",
            transcript=transcript,
        )
    return transcript


def guided_answer(
    record: DatasetRecord,
    library: Library,
    backend: Backend,
    retrieval: RetrievalConfig | None = None,
    templates: PromptTemplateSet | None = None,
    params: GenerationParams | None = None,
    budgets: dict[str, int] | None = None,
) -> ExecutionTranscript:
    """Retrieve the best-matching stored path for ``record`` and execute it."""
    retrieval = retrieval or RetrievalConfig()
    best = retrieve(record, library, backend, retrieval)[0]
    try:
        transcript = execute_path(record, best.entry.path, backend, templates, params, budgets)
    except ExtractionFailed as exc:
        if exc.transcript is not None:
            exc.transcript.retrieved_from = best.entry.question_id
            exc.transcript.retrieval_score = best.score
        raise
    transcript.retrieved_from = best.entry.question_id
    transcript.retrieval_score = best.score
    return transcript


def _run_ordered(records, worker: Callable, workers: int):
    if workers <= 1:
        return [worker(record) for record in records]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, records))


@dataclass
class RecordOutcome:
    question_id: str
    extracted: str | None
    correct: bool


@dataclass
class FixedPathReport:
    path: str
    total: int
    correct: int
    accuracy: float
    outcomes: list[RecordOutcome] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "path": self.path,
            "total": self.total,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "outcomes": [
                {"question_id": o.question_id, "extracted": o.extracted, "correct": o.correct}
                for o in self.outcomes
            ],
        }


def run_fixed_path_eval(
    records: Sequence[DatasetRecord],
    path: Sequence[str] | None,
    backend: Backend,
    templates: PromptTemplateSet | None = None,
    params: GenerationParams | None = None,
    budgets: dict[str, int] | None = None,
    workers: int = 1,
) -> FixedPathReport:
    """Accuracy of one fixed path over a keyed dataset.

    ``path=None`` is the no-guidance baseline: a single direct prompt per
    record. Records whose final text has no parseable answer count as
    incorrect rather than aborting the run.
    """
    if not records:
        raise EmptyDataset("no records to evaluate")
    for record in records:
        if record.answer is None:
            raise EmptyDataset(f"record {record.id} has no answer key")

    def worker(record: DatasetRecord) -> RecordOutcome:
        try:
            if path:
                transcript = execute_path(record, path, backend, templates, params, budgets)
            else:
                transcript = execute_direct(record, backend, templates, params)
        except ExtractionFailed:
            return RecordOutcome(record.id, None, False)
        verdict = judge_answer(record, transcript.final_text)
        return RecordOutcome(record.id, verdict.extracted, verdict.correct)

    outcomes = _run_ordered(records, worker, workers)
    correct = sum(1 for o in outcomes if o.correct)
    return FixedPathReport(
        path=format_path(path) if path else "vanilla",
        total=len(outcomes),
        correct=correct,
        accuracy=correct / len(outcomes),
        outcomes=outcomes,
    )


@dataclass
class ConsistencyReport:
    """How answers move between the first and second answer rounds."""

    total: int
    counts: dict[str, int]
    ratios: dict[str, float]

    def to_dict(self) -> dict:
        return {"total": self.total, "counts": dict(self.counts), "ratios": dict(self.ratios)}


def run_consistency(
    records: Sequence[DatasetRecord],
    backend: Backend,
    templates: PromptTemplateSet | None = None,
    params: GenerationParams | None = None,
    budgets: dict[str, int] | None = None,
    workers: int = 1,
) -> ConsistencyReport:
    """Two-round answer stability under the fixed path RR OA SR RR OA.

    Each record lands in one of four classes depending on whether the
    first and second answer steps were judged correct.
    """
    if not records:
        raise EmptyDataset("no records to evaluate")
    for record in records:
        if record.answer is None:
            raise EmptyDataset(f"record {record.id} has no answer key")

    def worker(record: DatasetRecord) -> str:
        try:
            transcript = execute_path(record, CONSISTENCY_PATH, backend, templates, params, budgets)
        except ExtractionFailed as exc:
            transcript = exc.transcript
        answers = [s.text for s in transcript.steps if s.function == ANSWER_FUNCTION]
        first = judge_answer(record, answers[0]).correct
        second = judge_answer(record, answers[-1]).correct
        return {
            (True, True): "correct_then_correct",
            (True, False): "correct_then_wrong",
            (False, True): "wrong_then_correct",
            (False, False): "wrong_then_wrong",
        }[(first, second)]

    labels = _run_ordered(records, worker, workers)
    counts = {name: labels.count(name) for name in TRANSITION_CLASSES}
    total = len(labels)
    ratios = {name: counts[name] / total for name in TRANSITION_CLASSES}
    return ConsistencyReport(total=total, counts=counts, ratios=ratios)
