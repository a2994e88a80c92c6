"""Best-first discovery of reasoning paths over the nine step functions.

The frontier holds (state, next-function) pairs scored by f = g + h
before any model call is made: g charges each completed step its cost
weight times its token count divided by its novelty, and h prices the
candidate step at its full token budget plus the cheapest possible spend
of whatever budget remains. Popping the frontier minimum triggers exactly
one backend generation for that candidate, so generations are the
metered resource. A search run ends at the first answer step the judge
accepts; an exhausted run restarts from scratch a limited number of
times before the question is given up as unsolved.
"""

from __future__ import annotations

import heapq
import itertools
import json
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from .backends import Backend, GenerationParams, build_params
from .errors import PathParseError
from .judging import judge_answer
from .prompts import PromptTemplateSet, step_history
from .tokens import tokenize

FUNCTION_NAMES = ("VA", "SA", "RR", "SR", "NA", "SP", "KI", "OA", "ER")
FUNCTION_TITLES = {
    "VA": "visual analysis",
    "SA": "system analysis",
    "RR": "regular reasoning",
    "SR": "self-reflection",
    "NA": "numerical analysis",
    "SP": "simplify problem",
    "KI": "knowledge injection",
    "OA": "output answer",
    "ER": "error reasoning",
}
FUNCTION_ALIASES = {"EA": "ER"}

ANSWER_FUNCTION = "OA"
USEFULNESS_FLOOR = 1e-3


def _default_weights() -> dict[str, float]:
    weights = {name: 1.6 for name in FUNCTION_NAMES}
    weights["RR"] = 1.0
    weights["SR"] = 1.8
    weights["ER"] = 1.8
    return weights


def _default_budgets() -> dict[str, int]:
    budgets = {name: 400 for name in FUNCTION_NAMES}
    budgets[ANSWER_FUNCTION] = 100
    return budgets


DEFAULT_BUDGETS = _default_budgets()


@dataclass(frozen=True)
class AbstractFunction:
    """One step function: its name, cost weight, and token budget."""

    name: str
    weight: float
    token_budget: int


@dataclass
class CostConfig:
    """Knobs of the cost model and the search constraints."""

    expected_total_tokens: int = 3000
    weights: dict[str, float] = field(default_factory=_default_weights)
    budgets: dict[str, int] = field(default_factory=_default_budgets)
    max_attempts: int = 100
    max_depth: int = 5
    retries: int = 2
    usefulness_floor: float = USEFULNESS_FLOOR

    def __post_init__(self):
        if self.expected_total_tokens <= 0:
            raise ValueError("expected_total_tokens must be positive")
        for name in FUNCTION_NAMES:
            if name not in self.weights:
                raise ValueError(f"missing cost weight for {name}")
            if name not in self.budgets:
                raise ValueError(f"missing token budget for {name}")

    def functions(self) -> tuple[AbstractFunction, ...]:
        return tuple(
            AbstractFunction(name, self.weights[name], self.budgets[name])
            for name in FUNCTION_NAMES
        )


@dataclass(frozen=True)
class StepResponse:
    function: str
    text: str
    token_count: int
    usefulness: float


@dataclass(frozen=True)
class SearchState:
    """A partial path: completed steps, their token total, and their cost."""

    steps: tuple[StepResponse, ...] = ()
    generated_tokens: int = 0
    g_cost: float = 0.0

    @property
    def depth(self) -> int:
        return len(self.steps)

    @property
    def path(self) -> tuple[str, ...]:
        return tuple(step.function for step in self.steps)

    def extend(self, step: StepResponse, config: CostConfig) -> "SearchState":
        return SearchState(
            steps=self.steps + (step,),
            generated_tokens=self.generated_tokens + step.token_count,
            g_cost=self.g_cost + step_cost(step, config),
        )


@dataclass
class ReasoningPath:
    """A discovered path plus how it was found."""

    functions: tuple[str, ...]
    question_id: str
    answer: str | None
    attempts: int


@dataclass
class Unsolved:
    """Marker value for a question the search gave up on."""

    question_id: str
    attempts: int
    tries: int


def usefulness(
    response_tokens: Sequence[str],
    prior_responses: Sequence[Sequence[str]],
    floor: float = USEFULNESS_FLOOR,
) -> float:
    """Fraction of token occurrences whose type is new relative to prior responses.

    Empty responses and responses with no novel tokens are clamped to the
    floor so they cost a lot without dividing by zero.
    """
    total = len(response_tokens)
    if total == 0:
        return floor
    seen = set()
    for prior in prior_responses:
        seen.update(prior)
    novel = sum(1 for tok in response_tokens if tok not in seen)
    return max(novel / total, floor)


def step_cost(step: StepResponse, config: CostConfig) -> float:
    return config.weights[step.function] * step.token_count / step.usefulness


def g_cost(state: SearchState, config: CostConfig) -> float:
    """Accumulated cost of the steps taken so far."""
    return sum(step_cost(step, config) for step in state.steps)


def h_cost(generated_tokens: int, function: str, config: CostConfig) -> float:
    """Model-free estimate of the cost to finish after taking ``function`` next.

    The candidate is priced at its full budget; the remaining token
    allowance is priced at weight 1 and perfect novelty, and clamps at
    zero so overspending is never rewarded.
    """
    budget = config.budgets[function]
    remaining = config.expected_total_tokens - generated_tokens - budget
    return config.weights[function] * budget + max(0.0, float(remaining))


def f_cost(state: SearchState, function: str, config: CostConfig) -> float:
    return g_cost(state, config) + h_cost(state.generated_tokens, function, config)


def recompute_g(steps: Sequence[StepResponse], config: CostConfig) -> float:
    """Re-derive the path cost from raw texts alone (novelty recomputed)."""
    total = 0.0
    prior: list[list[str]] = []
    for step in steps:
        toks = tokenize(step.text)
        u = usefulness(toks, prior, config.usefulness_floor)
        total += config.weights[step.function] * len(toks) / u
        prior.append(toks)
    return total


class TraceWriter:
    """One JSON object per line describing search events."""

    def __init__(self, stream):
        self.stream = stream

    def write(self, **event) -> None:
        if self.stream is not None:
            self.stream.write(json.dumps(event, sort_keys=True) + "\n")


def parse_path(text: str) -> tuple[str, ...]:
    """Parse "SA() RR() OA()" into a function-name tuple.

    Case-insensitive and whitespace-tolerant; EA is accepted as an alias
    for ER. Unknown names raise PathParseError naming the bad token.
    """
    chunks = text.split()
    if not chunks:
        raise PathParseError("empty path string")
    names = []
    for chunk in chunks:
        if not (chunk.endswith("()") and chunk[:-2].isalpha()):
            raise PathParseError(f"bad path token {chunk!r}; expected a name like SA()")
        name = chunk[:-2].upper()
        name = FUNCTION_ALIASES.get(name, name)
        if name not in FUNCTION_NAMES:
            raise PathParseError(f"unknown function {chunk[:-2]!r}")
        names.append(name)
    return tuple(names)


def format_path(functions: Sequence[str]) -> str:
    return " ".join(f"{name}()" for name in functions)


def scenario_key(question_id: str, path: Sequence[str]) -> str:
    return f"{question_id}/{' '.join(path)}"


def _assert_frontier_minimum(heap) -> None:
    head = heap[0]
    best = min(heap, key=lambda entry: (entry[0], entry[1]))
    assert (head[0], head[1]) == (best[0], best[1]), "heap head is not the frontier minimum"


def search(
    record,
    backend: Backend,
    config: CostConfig | None = None,
    *,
    templates: PromptTemplateSet | None = None,
    params: GenerationParams | None = None,
    judge: Callable = judge_answer,
    trace=None,
    debug_check_frontier: bool = False,
) -> ReasoningPath | Unsolved:
    """Find a reasoning path that answers ``record`` correctly.

    ``record`` must carry an answer key; every generation counts as one
    attempt against ``config.max_attempts``, and an exhausted run is
    restarted from scratch up to ``config.retries`` more times.
    """
    if record.answer is None:
        raise ValueError(f"record {record.id} has no answer key; search is supervised")
    config = config or CostConfig()
    templates = templates or PromptTemplateSet.default()
    params = params or build_params()
    tracer = TraceWriter(trace)

    total_attempts = 0
    tries = config.retries + 1
    for try_index in range(1, tries + 1):
        tracer.write(event="try_start", question_id=record.id, try_index=try_index)
        result, used = _run_once(
            record, backend, config, templates, params, judge, tracer,
            debug_check_frontier, total_attempts,
        )
        total_attempts += used
        if result is not None:
            result.attempts = total_attempts
            tracer.write(
                event="solved", question_id=record.id, path=list(result.functions),
                answer=result.answer, attempts=total_attempts, try_index=try_index,
            )
            return result
    tracer.write(event="unsolved", question_id=record.id, attempts=total_attempts, tries=tries)
    return Unsolved(question_id=record.id, attempts=total_attempts, tries=tries)


def _run_once(
    record,
    backend,
    config: CostConfig,
    templates: PromptTemplateSet,
    params: GenerationParams,
    judge,
    tracer: TraceWriter,
    debug_check_frontier: bool,
    attempts_before: int,
) -> tuple[ReasoningPath | None, int]:
    counter = itertools.count()
    root = SearchState()
    heap: list[tuple[float, int, SearchState, str]] = []
    for fn in FUNCTION_NAMES:
        heapq.heappush(heap, (f_cost(root, fn, config), next(counter), root, fn))

    attempts = 0
    while heap and attempts < config.max_attempts:
        if debug_check_frontier:
            _assert_frontier_minimum(heap)
        f, _, state, fn = heapq.heappop(heap)

        candidate_path = state.path + (fn,)
        history = step_history(record, fn, [(s.function, s.text) for s in state.steps], templates)
        generated = backend.generate(
            history,
            replace(params, max_tokens=config.budgets[fn]),
            scenario=scenario_key(record.id, candidate_path),
        )
        attempts += 1

        toks = tokenize(generated.text)
        u = usefulness(toks, [tokenize(s.text) for s in state.steps], config.usefulness_floor)
        step = StepResponse(function=fn, text=generated.text,
                            token_count=generated.token_count, usefulness=u)
        child = state.extend(step, config)
        tracer.write(
            event="expand", question_id=record.id, attempt=attempts_before + attempts,
            f=f, path=list(candidate_path), function=fn, response=generated.text,
            tokens=step.token_count, usefulness=u, g=child.g_cost,
        )

        if fn == ANSWER_FUNCTION:
            verdict = judge(record, generated.text)
            tracer.write(
                event="judge", question_id=record.id, attempt=attempts_before + attempts,
                extracted=verdict.extracted, correct=verdict.correct,
            )
            if verdict.correct:
                return (
                    ReasoningPath(
                        functions=candidate_path,
                        question_id=record.id,
                        answer=verdict.extracted,
                        attempts=0,  # caller fills in the cumulative count
                    ),
                    attempts,
                )

        if child.depth < config.max_depth:
            for next_fn in FUNCTION_NAMES:
                heapq.heappush(
                    heap, (f_cost(child, next_fn, config), next(counter), child, next_fn)
                )

    return None, attempts
