"""Model access: chat-style text generation and text embeddings.

Two implementations share one interface: ScriptedBackend replays canned
responses keyed by question id and step-function sequence (never by
prompt text, so fixtures survive template edits), and HttpBackend speaks
the chat-completions JSON convention with images inlined as base64 data
URLs. Both truncate responses to the requested token budget and report
the token count of what they return.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np
import requests

from .errors import (
    BackendUnavailable,
    DataError,
    EmptyText,
    MalformedResponse,
    StorageError,
)
from .textstats import words
from .tokens import count_tokens, truncate_tokens

logger = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant")

MOCK_EMBED_DIM = 256
DEFAULT_MOCK_RESPONSE = "I cannot determine anything new here."


@dataclass
class ChatTurn:
    role: str
    text: str
    image: str | None = None  # path to a PNG/JPEG file


@dataclass(frozen=True)
class GenerationParams:
    max_tokens: int = 400
    temperature: float = 1.0
    top_p: float = 0.9
    repetition_penalty: float = 1.05

    def __post_init__(self):
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.repetition_penalty <= 0:
            raise ValueError("repetition_penalty must be > 0")


def build_params() -> GenerationParams:
    """Sampling settings used while discovering library paths."""
    return GenerationParams(temperature=1.0, top_p=0.9, repetition_penalty=1.05)


def eval_params() -> GenerationParams:
    """Sampling settings used while answering with retrieved paths."""
    return GenerationParams(temperature=0.5, top_p=0.9, repetition_penalty=1.05)


@dataclass
class GenerationResult:
    text: str
    token_count: int


class EmbeddingVector:
    """A fixed-dimension real vector comparable by cosine similarity."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError("embedding must be one-dimensional")

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def tolist(self) -> list[float]:
        return [float(x) for x in self.values]


def cosine_similarity(a: EmbeddingVector | np.ndarray, b: EmbeddingVector | np.ndarray) -> float:
    va = a.values if isinstance(a, EmbeddingVector) else np.asarray(a, dtype=np.float64)
    vb = b.values if isinstance(b, EmbeddingVector) else np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(va, vb) / (na * nb))


def validate_history(history: Sequence[ChatTurn]) -> None:
    if not history:
        raise ValueError("history must not be empty")
    for turn in history:
        if turn.role not in ROLES:
            raise ValueError(f"unknown role {turn.role!r}")
    start = 1 if history[0].role == "system" else 0
    for i, turn in enumerate(history[start:]):
        expected = "user" if i % 2 == 0 else "assistant"
        if turn.role != expected:
            raise ValueError("turns must alternate user/assistant after the system turn")
    if history[-1].role != "user":
        raise ValueError("history must end with a user turn")


class Backend(Protocol):
    name: str

    def generate(
        self,
        history: Sequence[ChatTurn],
        params: GenerationParams,
        *,
        scenario: str | None = None,
    ) -> GenerationResult: ...

    def embed(self, text: str) -> EmbeddingVector: ...


def _finish(text: str, params: GenerationParams) -> GenerationResult:
    truncated = truncate_tokens(text, params.max_tokens)
    return GenerationResult(text=truncated, token_count=count_tokens(truncated))


def _hash_dim(word: str) -> int:
    digest = hashlib.sha1(word.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % MOCK_EMBED_DIM


class ScriptedBackend:
    """Deterministic backend that replays scripted responses.

    Script keys look like "q12/SA RR OA": the question id, a slash, then
    the space-separated step functions from the start of the path through
    the step being generated. Lookup tries the exact path key first, then
    falls back to "<id>/<last function>", then to the default response.
    """

    name = "mock"

    def __init__(self, scripts: dict[str, str] | None = None, default: str = DEFAULT_MOCK_RESPONSE):
        self.scripts = dict(scripts or {})
        self.default = default

    @classmethod
    def from_file(cls, path, default: str = DEFAULT_MOCK_RESPONSE) -> "ScriptedBackend":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise StorageError(f"cannot read script file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise StorageError(f"script file {path} is not valid JSON: {exc}") from exc
        if not isinstance(payload, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in payload.items()
        ):
            raise DataError(f"script file {path} must map string keys to string responses")
        return cls(payload, default=default)

    def _lookup(self, scenario: str | None) -> str:
        if scenario is None:
            return self.default
        if scenario in self.scripts:
            return self.scripts[scenario]
        qid, _, path = scenario.rpartition("/")
        steps = path.split()
        if qid and steps:
            fallback = f"{qid}/{steps[-1]}"
            if fallback in self.scripts:
                return self.scripts[fallback]
        return self.default

    def generate(self, history, params, *, scenario=None) -> GenerationResult:
        validate_history(history)
        return _finish(self._lookup(scenario), params)

    def embed(self, text: str) -> EmbeddingVector:
        """Feature-hash word counts into a unit vector; stable across runs."""
        ws = words(text)
        if not ws:
            raise EmptyText("cannot embed text with no words")
        vec = np.zeros(MOCK_EMBED_DIM, dtype=np.float64)
        for word, count in Counter(ws).items():
            vec[_hash_dim(word)] += count
        return EmbeddingVector(vec / np.linalg.norm(vec))


def _image_data_url(path: str) -> str:
    suffix = Path(path).suffix.lower()
    mime = "image/jpeg" if suffix in (".jpg", ".jpeg") else "image/png"
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read image {path}: {exc}") from exc
    return f"data:{mime};base64,{base64.b64encode(raw).decode('ascii')}"


@dataclass
class HttpBackend:
    """Chat-completions client over HTTP(S).

    POSTs to {base_url}/chat/completions and {base_url}/embeddings.
    Connection failures and 5xx responses are retried up to ``retries``
    times (each retry is logged); other failures raise immediately.
    """

    base_url: str
    model: str
    api_key: str | None = None
    timeout: float = 60.0
    retries: int = 2
    embedding_model: str | None = None
    name: str = field(init=False)

    def __post_init__(self):
        self.base_url = self.base_url.rstrip("/")
        self.name = self.model

    def generate(self, history, params, *, scenario=None) -> GenerationResult:
        validate_history(history)
        body = {
            "model": self.model,
            "messages": [self._message(turn) for turn in history],
            "max_tokens": params.max_tokens,
            "temperature": params.temperature,
            "top_p": params.top_p,
            "repetition_penalty": params.repetition_penalty,
        }
        payload = self._post("/chat/completions", body)
        try:
            text = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse(f"unexpected completion payload: {exc}") from exc
        if not isinstance(text, str):
            raise MalformedResponse("completion content is not a string")
        return _finish(text, params)

    def embed(self, text: str) -> EmbeddingVector:
        if not text.strip():
            raise EmptyText("cannot embed empty text")
        body = {"model": self.embedding_model or self.model, "input": text}
        payload = self._post("/embeddings", body)
        try:
            values = payload["data"][0]["embedding"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse(f"unexpected embedding payload: {exc}") from exc
        return EmbeddingVector(values)

    @staticmethod
    def _message(turn: ChatTurn) -> dict:
        if turn.image:
            return {
                "role": turn.role,
                "content": [
                    {"type": "text", "text": turn.text},
                    {"type": "image_url", "image_url": {"url": _image_data_url(turn.image)}},
                ],
            }
        return {"role": turn.role, "content": turn.text}

    def _post(self, path: str, body: dict) -> dict:
        url = self.base_url + path
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error = "no attempts made"
        for attempt in range(self.retries + 1):
            if attempt:
                logger.warning("retrying %s (attempt %d of %d): %s",
                               url, attempt + 1, self.retries + 1, last_error)
            try:
                response = requests.post(url, json=body, headers=headers, timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = str(exc)
                continue
            if response.status_code >= 500:
                last_error = f"HTTP {response.status_code}"
                continue
            if response.status_code != 200:
                raise BackendUnavailable(f"{url} answered HTTP {response.status_code}")
            try:
                return response.json()
            except ValueError as exc:
                raise MalformedResponse(f"{url} returned non-JSON body") from exc
        raise BackendUnavailable(f"{url} unreachable after {self.retries + 1} attempts: {last_error}")
