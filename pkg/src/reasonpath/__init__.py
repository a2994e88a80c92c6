"""Difficulty-aware discovery, storage, and reuse of structured reasoning paths."""

from .backends import (
    ChatTurn,
    EmbeddingVector,
    GenerationParams,
    GenerationResult,
    HttpBackend,
    ScriptedBackend,
    build_params,
    cosine_similarity,
    eval_params,
)
from .dataset import DatasetRecord, load_dataset
from .errors import (
    BackendError,
    BackendUnavailable,
    DataError,
    PathParseError,
    ReasonPathError,
)
from .evaluation import (
    JudgedResult,
    accuracy,
    grouped_accuracy,
    metrics_report,
    strict_match,
    yesno_precision_recall,
)
from .executor import (
    ExecutionTranscript,
    execute_direct,
    execute_path,
    guided_answer,
    run_consistency,
    run_fixed_path_eval,
)
from .features import (
    DifficultyFeatureVector,
    NormalizationStats,
    apply_normalization,
    compute_dfv,
    compute_features,
    fit_normalization,
)
from .judging import judge_answer, normalize_answer
from .library import Library, LibraryEntry, RetrievalConfig, hss, rank, retrieve
from .prompts import PromptTemplateSet
from .sampling import PcaProjection, SeedSelection, max_min_sample, pca_project
from .search import (
    AbstractFunction,
    CostConfig,
    ReasoningPath,
    SearchState,
    StepResponse,
    Unsolved,
    f_cost,
    format_path,
    g_cost,
    h_cost,
    parse_path,
    search,
    usefulness,
)

__version__ = "0.1.0"

__all__ = [
    "AbstractFunction", "BackendError", "BackendUnavailable", "ChatTurn",
    "CostConfig", "DataError", "DatasetRecord", "DifficultyFeatureVector",
    "EmbeddingVector", "ExecutionTranscript", "GenerationParams",
    "GenerationResult", "HttpBackend", "JudgedResult", "Library",
    "LibraryEntry", "NormalizationStats", "PathParseError", "PcaProjection",
    "PromptTemplateSet", "ReasonPathError", "ReasoningPath", "RetrievalConfig",
    "ScriptedBackend", "SearchState", "SeedSelection", "StepResponse",
    "Unsolved", "accuracy", "apply_normalization", "build_params",
    "compute_dfv", "compute_features", "cosine_similarity", "eval_params",
    "execute_direct", "execute_path", "f_cost", "fit_normalization",
    "format_path", "g_cost", "grouped_accuracy", "guided_answer", "h_cost",
    "hss", "judge_answer", "load_dataset", "max_min_sample", "metrics_report",
    "normalize_answer", "parse_path", "pca_project", "rank", "retrieve",
    "run_consistency", "run_fixed_path_eval", "search", "strict_match",
    "usefulness", "yesno_precision_recall",
]
