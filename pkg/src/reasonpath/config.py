"""Run configuration shared by the CLI subcommands.

A JSON config file can override any default; individual CLI flags
override the file. Defaults follow the reference settings: an expected
episode budget of 3000 tokens, cost weights 1.0 for RR, 1.8 for SR and
ER, and 1.6 elsewhere, 400-token step budgets (100 for the answer step),
retrieval alpha 0.5, 500 seeds, and temperature 1.0 while building the
library versus 0.5 while answering.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .backends import GenerationParams, HttpBackend, ScriptedBackend, build_params, eval_params
from .errors import DataError, StorageError
from .library import RetrievalConfig
from .search import CostConfig

API_KEY_ENV = "REASONPATH_API_KEY"
MOCK_TIMESTAMP = "1970-01-01T00:00:00Z"


@dataclass
class BackendSettings:
    kind: str = "mock"
    scripts: str | None = None  # mock script file
    default_response: str | None = None
    base_url: str | None = None
    model: str = "default-model"
    embedding_model: str | None = None
    api_key_env: str = API_KEY_ENV
    timeout: float = 60.0
    retries: int = 2


@dataclass
class PipelineConfig:
    backend: BackendSettings = field(default_factory=BackendSettings)
    cost: CostConfig = field(default_factory=CostConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    build_generation: GenerationParams = field(default_factory=build_params)
    eval_generation: GenerationParams = field(default_factory=eval_params)
    templates: str | None = None
    seed_count: int = 500
    workers: int = 1
    trace: str | None = None


def _build_section(cls, payload: dict, where: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(payload) - allowed
    if unknown:
        raise DataError(f"unknown keys in config section {where!r}: {sorted(unknown)}")
    try:
        return cls(**payload)
    except (TypeError, ValueError) as exc:
        raise DataError(f"bad config section {where!r}: {exc}") from exc


def load_config(path=None) -> PipelineConfig:
    """Build a PipelineConfig from an optional JSON file."""
    if path is None:
        return PipelineConfig()
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise StorageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise DataError(f"config {path} must be a JSON object")

    known = {"backend", "cost", "retrieval", "build_generation", "eval_generation",
             "templates", "seed_count", "workers", "trace"}
    unknown = set(payload) - known
    if unknown:
        raise DataError(f"unknown keys in config: {sorted(unknown)}")

    config = PipelineConfig()
    if "backend" in payload:
        config.backend = _build_section(BackendSettings, payload["backend"], "backend")
    if "cost" in payload:
        config.cost = _build_section(CostConfig, payload["cost"], "cost")
    if "retrieval" in payload:
        config.retrieval = _build_section(RetrievalConfig, payload["retrieval"], "retrieval")
    if "build_generation" in payload:
        config.build_generation = _build_section(GenerationParams, payload["build_generation"], "build_generation")
    if "eval_generation" in payload:
        config.eval_generation = _build_section(GenerationParams, payload["eval_generation"], "eval_generation")
    config.templates = payload.get("templates", config.templates)
    config.seed_count = int(payload.get("seed_count", config.seed_count))
    config.workers = int(payload.get("workers", config.workers))
    config.trace = payload.get("trace", config.trace)
    return config


def make_backend(config: PipelineConfig):
    settings = config.backend
    if settings.kind == "mock":
        if settings.scripts:
            default = settings.default_response
            if default is not None:
                return ScriptedBackend.from_file(settings.scripts, default=default)
            return ScriptedBackend.from_file(settings.scripts)
        if settings.default_response is not None:
            return ScriptedBackend(default=settings.default_response)
        return ScriptedBackend()
    if settings.kind == "http":
        if not settings.base_url:
            raise DataError("http backend needs backend.base_url in the config")
        return HttpBackend(
            base_url=settings.base_url,
            model=settings.model,
            api_key=os.environ.get(settings.api_key_env),
            timeout=settings.timeout,
            retries=settings.retries,
            embedding_model=settings.embedding_model,
        )
    raise DataError(f"unknown backend kind {settings.kind!r}; expected mock or http")


def library_timestamp(config: PipelineConfig) -> str:
    """Creation stamp for library entries; fixed under the mock backend so
    identical runs produce identical bytes."""
    if config.backend.kind == "mock":
        return MOCK_TIMESTAMP
    from datetime import datetime, timezone

    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
