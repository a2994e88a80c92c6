"""JSON-lines question records.

Each line is one object: id, question, optional image path (resolved
against the dataset file's directory at load time), optional ordered
choices, optional answer key, a format tag (mcqa, yesno, numeric, open),
and optional grouping keys for grouped accuracy.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import DataError, EmptyDataset

FORMATS = ("mcqa", "yesno", "numeric", "open")


@dataclass
class DatasetRecord:
    id: str
    question: str
    answer: str | None = None
    format: str = "open"
    image: str | None = None
    choices: list[str] | None = None
    figure_id: str | None = None
    question_group_id: str | None = None

    def validate(self) -> None:
        if not self.id:
            raise DataError("record has no id")
        if not self.question or not self.question.strip():
            raise DataError(f"record {self.id}: empty question")
        if self.format not in FORMATS:
            raise DataError(f"record {self.id}: unknown format {self.format!r}")
        if self.format == "mcqa":
            if not self.choices or len(self.choices) < 2:
                raise DataError(f"record {self.id}: mcqa needs at least 2 choices")
        if self.answer is not None:
            self._validate_answer()

    def _validate_answer(self) -> None:
        ans = self.answer.strip()
        if self.format == "mcqa":
            if len(ans) != 1 or not ans.isalpha():
                raise DataError(f"record {self.id}: mcqa answer must be a single letter")
            if ord(ans.lower()) - ord("a") >= len(self.choices):
                raise DataError(f"record {self.id}: answer {ans!r} is outside the choices")
        elif self.format == "yesno":
            if ans.lower() not in ("yes", "no"):
                raise DataError(f"record {self.id}: yes/no answer must be yes or no")
        elif self.format == "numeric":
            try:
                float(ans)
            except ValueError:
                raise DataError(f"record {self.id}: numeric answer {ans!r} does not parse")
        else:
            if not ans:
                raise DataError(f"record {self.id}: empty open answer")

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetRecord":
        known = {
            "id", "question", "answer", "format", "image",
            "choices", "figure_id", "question_group_id",
        }
        unknown = set(data) - known
        if unknown:
            raise DataError(f"record has unknown fields: {sorted(unknown)}")
        answer = data.get("answer")
        if answer is not None:
            answer = str(answer)
        choices = data.get("choices")
        if choices is not None:
            choices = [str(c) for c in choices]
        record = cls(
            id=str(data.get("id", "")),
            question=str(data.get("question", "")),
            answer=answer,
            format=str(data.get("format", "open")),
            image=data.get("image"),
            choices=choices,
            figure_id=data.get("figure_id"),
            question_group_id=data.get("question_group_id"),
        )
        record.validate()
        return record


def load_dataset(path) -> list[DatasetRecord]:
    """Read records from a JSON-lines file, resolving image paths."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc

    records = []
    seen = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        record = DatasetRecord.from_dict(payload)
        if record.id in seen:
            raise DataError(f"{path}:{lineno}: duplicate record id {record.id!r}")
        seen.add(record.id)
        if record.image:
            record.image = str((path.parent / record.image).resolve())
        records.append(record)

    if not records:
        raise EmptyDataset(f"dataset {path} has no records")
    return records
