"""Prompt templates for the step functions and direct answering.

Templates are configuration, not code: the defaults ship as a JSON data
file and users may supply their own JSON or TOML file with the same
keys. Placeholders are {{question}}, {{choices}}, {{transcript}}, and
{{image}}; the image placeholder expands to a short marker while the
image itself rides along on the chat turn. When a record has an image it
is attached to every step's prompt.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

from .backends import ChatTurn
from .errors import DataError, StorageError

STEP_FUNCTION_NAMES = ("VA", "SA", "RR", "SR", "NA", "SP", "KI", "OA", "ER")
DIRECT_KEY = "direct"
IMAGE_MARKER = "[An image is attached.]\n"


@dataclass
class PromptTemplateSet:
    templates: dict[str, str]

    def __post_init__(self):
        missing = [k for k in (*STEP_FUNCTION_NAMES, DIRECT_KEY) if k not in self.templates]
        if missing:
            raise DataError(f"template set is missing entries for: {missing}")

    @classmethod
    def default(cls) -> "PromptTemplateSet":
        raw = resources.files("reasonpath.data").joinpath("default_templates.json").read_text("utf-8")
        return cls(json.loads(raw))

    @classmethod
    def from_file(cls, path) -> "PromptTemplateSet":
        path = Path(path)
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise StorageError(f"cannot read template file {path}: {exc}") from exc
        if path.suffix.lower() == ".toml":
            try:
                import tomllib  # Python >= 3.11
            except ModuleNotFoundError:
                try:
                    import tomli as tomllib
                except ModuleNotFoundError:
                    raise DataError("TOML templates need Python 3.11+ or the tomli package")
            try:
                payload = tomllib.loads(raw.decode("utf-8"))
            except Exception as exc:
                raise DataError(f"template file {path} is not valid TOML: {exc}") from exc
        else:
            try:
                payload = json.loads(raw.decode("utf-8"))
            except json.JSONDecodeError as exc:
                raise DataError(f"template file {path} is not valid JSON: {exc}") from exc
        if not isinstance(payload, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in payload.items()
        ):
            raise DataError(f"template file {path} must map names to template strings")
        return cls(payload)

    def render(self, key: str, record, prior_steps: Sequence[tuple[str, str]]) -> str:
        template = self.templates[key]
        choices = ""
        if record.choices:
            letters = (chr(ord("A") + i) for i in range(len(record.choices)))
            choices = "\n".join(f"{letter}. {text}" for letter, text in zip(letters, record.choices)) + "\n"
        transcript = "\n\n".join(f"{fn}: {text}" for fn, text in prior_steps) or "(nothing yet)"
        image = IMAGE_MARKER if record.image else ""
        return (
            template.replace("{{question}}", record.question)
            .replace("{{choices}}", choices)
            .replace("{{transcript}}", transcript)
            .replace("{{image}}", image)
        )


def step_history(
    record,
    key: str,
    prior_steps: Sequence[tuple[str, str]],
    templates: PromptTemplateSet,
) -> list[ChatTurn]:
    """Build the chat history for one step: optional system turn, then the user turn."""
    history = []
    system = templates.templates.get("system")
    if system:
        history.append(ChatTurn(role="system", text=system))
    history.append(ChatTurn(role="user", text=templates.render(key, record, prior_steps), image=record.image))
    return history
