"""Acceptance gate: every criterion below runs offline against the
scripted backend (or a local stub server) and prints one PASS line when
its assertions hold at the stated tolerance.
"""

import io
import json
import math
import time

import numpy as np
import pytest

from canny_reference import reference_canny
from conftest import StubServer, build_demo_pipeline, run_cli_pipeline
from reasonpath.backends import HttpBackend, ScriptedBackend, build_params, eval_params
from reasonpath.canny import canny_edges, color_diversity, edge_pixel_density
from reasonpath.dataset import DatasetRecord
from reasonpath.evaluation import JudgedResult, accuracy, grouped_accuracy, yesno_precision_recall
from reasonpath.executor import run_consistency, run_fixed_path_eval
from reasonpath.features import (
    DifficultyFeatureVector,
    apply_normalization,
    compute_features,
    fit_normalization,
)
from reasonpath.library import LibraryEntry, rank
from reasonpath.sampling import max_min_sample
from reasonpath.search import (
    CostConfig,
    ReasoningPath,
    SearchState,
    StepResponse,
    Unsolved,
    f_cost,
    g_cost,
    h_cost,
    search,
    usefulness,
)
from reasonpath.textstats import TextMetrics, flesch_reading_ease, shannon_entropy, text_metrics


def _report(name: str) -> None:
    print(f"PASS: {name}")


# ---------------------------------------------------------------------------
# criterion 1: difficulty features
# ---------------------------------------------------------------------------

def test_dfv_metric_suite(synthetic_images):
    started = time.monotonic()

    m = text_metrics("The cat sat.")
    assert abs(m.asl - 3.0) < 1e-9 and abs(m.asw - 1.0) < 1e-9
    assert text_metrics("Go. Go. Go.").asl == pytest.approx(1.0, abs=1e-9)
    assert abs(flesch_reading_ease(TextMetrics(10, 1.5, 0, 0)) - 69.785) < 1e-9
    assert abs(flesch_reading_ease(TextMetrics(3, 1.0, 0, 0)) - 119.19) < 1e-9
    assert abs(shannon_entropy("a a a a")) < 1e-9
    assert abs(shannon_entropy("a b") - 1.0) < 1e-9
    assert abs(shannon_entropy("a a b b c c d d") - 2.0) < 1e-9
    text = "Two sentences here. And then some more words follow."
    assert abs(compute_features(text).clc - text_metrics(text).asl) < 1e-9

    total_pixels = 0
    total_disagreement = 0
    for image in synthetic_images:
        mine = canny_edges(image)
        ref = reference_canny(image)
        disagreement = int((mine != ref).sum())
        assert disagreement / mine.size <= 0.02, "edge masks diverge beyond 2% of pixels"
        total_pixels += mine.size
        total_disagreement += disagreement
    assert total_disagreement / total_pixels <= 0.02
    assert edge_pixel_density(np.full((64, 64, 3), 128, dtype=np.uint8)) == 0.0

    solid = np.zeros((10, 10, 3), dtype=np.uint8)
    solid[..., 0] = 255
    assert color_diversity(solid) == 0.01
    distinct = np.arange(300, dtype=np.uint8).reshape(10, 10, 3)
    assert color_diversity(distinct) == 1.0
    checker = np.zeros((4, 4, 3), dtype=np.uint8)
    checker[::2, 1::2] = 255
    checker[1::2, ::2] = 255
    assert color_diversity(checker) == 0.125

    elapsed = time.monotonic() - started
    assert elapsed < 5.0, f"feature suite took {elapsed:.2f}s"
    _report("DFV metric suite (text exact to 1e-9, edges within 2% of reference, colors exact)")


# ---------------------------------------------------------------------------
# criterion 2: z-score normalization
# ---------------------------------------------------------------------------

def test_normalization_over_random_population():
    rng = np.random.default_rng(101)
    rows = rng.normal(loc=12.0, scale=7.0, size=(1000, 5))
    rows[:, 3] = 2.5  # degenerate dimension
    dfvs = [DifficultyFeatureVector(*row) for row in rows]
    stats = fit_normalization(dfvs)
    assert stats.degenerate == (False, False, False, True, False)

    z = np.array([apply_normalization(d, stats) for d in dfvs])
    for dim in (0, 1, 2, 4):
        assert abs(z[:, dim].mean()) < 1e-9
        assert abs(z[:, dim].std() - 1.0) < 1e-9
    assert np.all(z[:, 3] == 0.0)
    _report("normalization (|mean| < 1e-9, |std-1| < 1e-9 over 1000 vectors, degenerate dims -> 0)")


# ---------------------------------------------------------------------------
# criterion 3: max-min sampling
# ---------------------------------------------------------------------------

def _oracle_max_min(points: np.ndarray, k: int) -> list[int]:
    n = len(points)
    centroid = points.mean(axis=0)
    start = min(range(n), key=lambda i: (-float(np.linalg.norm(points[i] - centroid)), i))
    chosen = [start]
    while len(chosen) < min(k, n):
        best_distance, best_index = -1.0, None
        for i in range(n):
            if i in chosen:
                continue
            nearest = min(float(np.linalg.norm(points[i] - points[j])) for j in chosen)
            if nearest > best_distance:
                best_distance, best_index = nearest, i
        chosen.append(best_index)
    return chosen


def test_max_min_sampling_matches_oracle():
    line = np.zeros((10, 5))
    line[:, 0] = np.arange(10)
    assert max_min_sample(line, 3).indices == [0, 9, 4]

    rng = np.random.default_rng(202)
    for _ in range(200):
        n = int(rng.integers(1, 51))
        k = int(rng.integers(1, 11))
        points = rng.normal(size=(n, 5))
        assert max_min_sample(points, k).indices == _oracle_max_min(points, k)
    _report("max-min sampling (exact oracle match on 200 instances plus the [0, 9, 4] case)")


# ---------------------------------------------------------------------------
# criterion 4: cost model
# ---------------------------------------------------------------------------

def test_cost_model():
    config = CostConfig()

    state1 = SearchState().extend(StepResponse("RR", "x", 10, 1.0), config)
    assert abs(g_cost(state1, config) - 10.0) < 1e-12
    state2 = state1.extend(StepResponse("SR", "y", 20, 0.5), config)
    assert abs(g_cost(state2, config) - 82.0) < 1e-12
    assert g_cost(SearchState(), config) == 0.0

    assert abs(h_cost(100, "SA", config) - 3140.0) < 1e-12
    assert abs(h_cost(2950, "OA", config) - 160.0) < 1e-12
    assert abs(g_cost(SearchState(), config) + h_cost(100, "SA", config) - 3140.0) < 1e-12
    assert abs(82.0 + 3140.0 - 3222.0) < 1e-12

    # the remaining-token term clamps whenever G + budget exceeds the total
    for generated in (2601, 2900, 2950, 3000, 9999):
        assert h_cost(generated, "SA", config) == pytest.approx(1.6 * 400, abs=1e-12)
    assert h_cost(2600, "SA", config) == pytest.approx(1.6 * 400, abs=1e-12)
    assert h_cost(2599, "SA", config) == pytest.approx(1.6 * 400 + 1.0, abs=1e-12)

    functions = ("VA", "SA", "RR", "SR", "NA", "SP", "KI", "OA", "ER")
    rng = np.random.default_rng(303)
    for _ in range(1000):
        state = SearchState()
        for _ in range(int(rng.integers(0, 5))):
            state = state.extend(
                StepResponse(str(rng.choice(functions)), "t",
                             int(rng.integers(0, 400)), float(rng.uniform(1e-3, 1.0))),
                config,
            )
        fn = str(rng.choice(functions))
        assert abs(
            f_cost(state, fn, config)
            - (g_cost(state, config) + h_cost(state.generated_tokens, fn, config))
        ) < 1e-12

    vocab = [f"w{i}" for i in range(30)]
    for _ in range(500):
        tokens = list(rng.choice(vocab, size=int(rng.integers(0, 25))))
        priors = [list(rng.choice(vocab, size=int(rng.integers(0, 20))))
                  for _ in range(int(rng.integers(0, 4)))]
        seen = set()
        for prior in priors:
            seen |= set(prior)
        if tokens:
            expected = max(sum(1 for t in tokens if t not in seen) / len(tokens), 1e-3)
        else:
            expected = 1e-3
        assert usefulness(tokens, priors) == pytest.approx(expected, abs=1e-15)
    _report("cost model (worked g/h/f values to 1e-12, f = g + h on 1000 states, clamp, usefulness oracle)")


# ---------------------------------------------------------------------------
# criterion 5: search behavior on scripted scenarios
# ---------------------------------------------------------------------------

def _scenario(index: int):
    qid = f"s{index:02d}"
    record = DatasetRecord(
        id=qid,
        question=f"Scenario {index} asks which option is correct for case {index}?",
        answer="B", format="mcqa", choices=["one", "two", "three", "four"],
    )
    kind = index % 5
    scripts = {f"{qid}/OA": "Answer: D"}  # wrong outside the scripted context
    if kind == 0:
        scripts[f"{qid}/OA"] = "Answer: B"
        expected = ("OA",)
    elif kind == 1:
        scripts[f"{qid}/RR"] = f"case {index} reasoning narrows the field toward option two"
        scripts[f"{qid}/RR OA"] = "Answer: B"
        expected = ("RR", "OA")
    elif kind == 2:
        scripts[f"{qid}/SA"] = f"case {index} splits into premise and conclusion parts"
        scripts[f"{qid}/SA RR"] = f"combining the parts of case {index} points to option two"
        scripts[f"{qid}/SA RR OA"] = "Answer: B"
        expected = ("SA", "RR", "OA")
    elif kind == 3:
        scripts[f"{qid}/VA"] = f"the picture for case {index} shows two marked regions"
        scripts[f"{qid}/VA RR"] = f"the marked regions imply option two fits case {index}"
        scripts[f"{qid}/VA RR OA"] = "Answer: B"
        expected = ("VA", "RR", "OA")
    else:
        expected = None  # unsolvable
    return record, scripts, expected


def test_search_scenarios():
    started = time.monotonic()
    config = CostConfig()
    solved = 0
    for index in range(20):
        record, scripts, expected = _scenario(index)
        backend = ScriptedBackend(scripts)
        trace = io.StringIO()
        outcome = search(record, backend, config, trace=trace, debug_check_frontier=True)
        events = [json.loads(line) for line in trace.getvalue().splitlines()]

        # (c) depth never exceeds 5
        depths = [len(e["path"]) for e in events if e["event"] == "expand"]
        assert max(depths) <= 5

        # (b) attempts per try never exceed 100, and there are at most 3 tries
        per_try = []
        for event in events:
            if event["event"] == "try_start":
                per_try.append(0)
            elif event["event"] == "expand":
                per_try[-1] += 1
        assert all(count <= config.max_attempts for count in per_try)
        assert len(per_try) <= config.retries + 1

        judges = [e for e in events if e["event"] == "judge"]
        if expected is None:
            assert isinstance(outcome, Unsolved)
            assert outcome.tries == 3 and outcome.attempts == 300
            assert not any(e["correct"] for e in judges)
        else:
            assert isinstance(outcome, ReasoningPath)
            solved += 1
            assert outcome.functions == expected
            assert outcome.attempts <= config.max_attempts
            # (d) the search halts at the first accepted answer
            assert sum(1 for e in judges if e["correct"]) == 1
            assert judges[-1]["correct"] is True
            assert events[-1]["event"] == "solved"
    assert solved == 16

    elapsed = time.monotonic() - started
    assert elapsed < 10.0, f"search scenarios took {elapsed:.2f}s"
    _report("search (frontier-minimum pops, attempt/retry/depth caps, immediate halt on 20 scenarios)")


# ---------------------------------------------------------------------------
# criterion 6: retrieval
# ---------------------------------------------------------------------------

def test_retrieval_matches_brute_force():
    rng = np.random.default_rng(404)
    alpha = 0.5
    for _ in range(1000):
        dfvs = rng.normal(size=(100, 5))
        embeddings = rng.normal(size=(100, 8))
        ids = [f"q{i:03d}" for i in range(100)]
        entries = [
            LibraryEntry(
                question_id=ids[i], question="q", dfv_raw=tuple(dfvs[i]),
                dfv_normalized=tuple(dfvs[i]), embedding=list(embeddings[i]),
                path=("OA",), answer="B", attempts=1,
                created_at="1970-01-01T00:00:00Z", backend="mock",
            )
            for i in range(100)
        ]
        query_dfv = rng.normal(size=5)
        query_emb = rng.normal(size=8)

        got = rank(tuple(query_dfv), query_emb, entries, alpha, top_k=1)[0]

        distances = np.sqrt(((dfvs - query_dfv) ** 2).sum(axis=1))
        norms = np.sqrt((embeddings**2).sum(axis=1)) * math.sqrt(float(query_emb @ query_emb))
        scores = alpha * distances - (1 - alpha) * (embeddings @ query_emb) / norms
        best = min(range(100), key=lambda i: (scores[i], ids[i]))

        assert got.entry.question_id == ids[best]
        assert got.score == pytest.approx(float(scores[best]), abs=1e-12)

    entry = LibraryEntry(
        question_id="self", question="q", dfv_raw=(0.1, 0.2, 0.3, 0.4, 0.5),
        dfv_normalized=(0.1, 0.2, 0.3, 0.4, 0.5), embedding=[0.6, 0.8],
        path=("OA",), answer="B", attempts=1,
        created_at="1970-01-01T00:00:00Z", backend="mock",
    )
    score = rank((0.1, 0.2, 0.3, 0.4, 0.5), np.array([0.6, 0.8]), [entry], alpha, 1)[0].score
    assert score == pytest.approx(-(1 - alpha), abs=1e-12)
    _report("retrieval (exact brute-force agreement on 1000 random libraries, self-match -(1-alpha))")


# ---------------------------------------------------------------------------
# criterion 7: end-to-end smoke
# ---------------------------------------------------------------------------

def test_end_to_end_smoke(tmp_path):
    demo = build_demo_pipeline(tmp_path / "demo")

    started = time.monotonic()
    first = run_cli_pipeline(demo, tmp_path / "run1", k=5)
    first_elapsed = time.monotonic() - started
    assert first_elapsed < 30.0, f"pipeline took {first_elapsed:.2f}s"

    report = json.loads(first["report"].read_text())
    assert len(report["solved"]) >= 4
    transcripts = [json.loads(line) for line in first["transcripts"].read_text().splitlines()]
    assert len(transcripts) == 5
    metrics = json.loads(first["metrics"].read_text())
    assert metrics["total"] == 5

    second = run_cli_pipeline(demo, tmp_path / "run2", k=5)
    for name, path in first.items():
        assert path.read_bytes() == second[name].read_bytes(), f"{name} differs between reruns"
    _report("end-to-end smoke (10 records -> 5 seeds -> library -> infer -> eval, byte-identical reruns)")


# ---------------------------------------------------------------------------
# criterion 8: fixed-path and consistency modes
# ---------------------------------------------------------------------------

def test_fixed_path_and_consistency_fixtures():
    records, scripts = [], {}
    for i in range(10):
        qid = f"q{i:02d}"
        records.append(DatasetRecord(id=qid, question="Pick the right option now?",
                                     answer="B", format="mcqa", choices=["one", "two", "three"]))
        scripts[f"{qid}/OA"] = "Answer: B" if i < 6 else "Answer: C"
    report = run_fixed_path_eval(records, ("SA", "RR", "RR"), ScriptedBackend(scripts))
    assert report.accuracy == pytest.approx(0.600, abs=1e-12)

    plan = {"c0": ("B", "B"), "c1": ("B", "B"), "c2": ("B", "C"),
            "c3": ("C", "B"), "c4": ("C", "C")}
    consistency_records = [
        DatasetRecord(id=qid, question="Choose an option?", answer="B",
                      format="mcqa", choices=["one", "two", "three"])
        for qid in plan
    ]
    consistency_scripts = {}
    for qid, (first_round, second_round) in plan.items():
        consistency_scripts[f"{qid}/RR OA"] = f"Answer: {first_round}"
        consistency_scripts[f"{qid}/RR OA SR RR OA"] = f"Answer: {second_round}"
    transitions = run_consistency(consistency_records, ScriptedBackend(consistency_scripts))
    assert transitions.ratios == {
        "correct_then_correct": 0.4,
        "correct_then_wrong": 0.2,
        "wrong_then_correct": 0.2,
        "wrong_then_wrong": 0.2,
    }
    assert sum(transitions.counts.values()) == transitions.total
    assert sum(transitions.ratios.values()) == pytest.approx(1.0, abs=1e-12)
    _report("fixed-path and consistency (0.600 accuracy fixture, 40/20/20/20 transitions summing to 100%)")


# ---------------------------------------------------------------------------
# criterion 9: HTTP backend conformance
# ---------------------------------------------------------------------------

def test_http_backend_conformance(tmp_path):
    import base64

    from PIL import Image
    from reasonpath.backends import ChatTurn

    image_path = tmp_path / "img.png"
    Image.fromarray(np.arange(48, dtype=np.uint8).reshape(4, 4, 3)).save(image_path)
    expected_url = "data:image/png;base64," + base64.b64encode(image_path.read_bytes()).decode()

    with StubServer() as server:
        backend = HttpBackend(base_url=server.base_url, model="conformance-model")
        build_result = backend.generate(
            [ChatTurn(role="user", text="build prompt", image=str(image_path))], build_params()
        )
        eval_result = backend.generate(
            [ChatTurn(role="user", text="eval prompt")], eval_params()
        )

    build_body = server.requests[0]["body"]
    assert build_body["repetition_penalty"] == 1.05
    assert build_body["temperature"] == 1.0
    assert build_body["top_p"] == 0.9
    assert build_body["messages"][0]["content"][1]["image_url"]["url"] == expected_url

    eval_body = server.requests[1]["body"]
    assert eval_body["repetition_penalty"] == 1.05
    assert eval_body["temperature"] == 0.5
    assert eval_body["top_p"] == 0.9

    assert build_result.text == "stub reply text"
    assert eval_result.text == "stub reply text"
    _report("HTTP conformance (sampling parameters verbatim, base64 image, response unmodified)")


# ---------------------------------------------------------------------------
# criterion 10: metrics
# ---------------------------------------------------------------------------

def test_metric_fixtures_and_grouping_bound():
    # TP=2, FP=1, FN=2, TN=10: accuracy 0.8, precision 2/3, recall 0.5
    results = []
    results += [JudgedResult(f"tp{i}", "yes", "yes", True, "yesno") for i in range(2)]
    results += [JudgedResult("fp0", "yes", "no", False, "yesno")]
    results += [JudgedResult(f"fn{i}", "no", "yes", False, "yesno") for i in range(2)]
    results += [JudgedResult(f"tn{i}", "no", "no", True, "yesno") for i in range(10)]
    assert accuracy(results) == pytest.approx(0.8, abs=1e-12)
    precision, recall = yesno_precision_recall(results)
    assert precision == pytest.approx(2 / 3, abs=1e-12)
    assert recall == pytest.approx(0.5, abs=1e-12)

    rng = np.random.default_rng(505)
    for _ in range(100):
        n = int(rng.integers(1, 60))
        grouped = [
            JudgedResult(f"q{i}", "x", "x", bool(rng.random() < 0.6), "open",
                         figure_id=f"g{int(rng.integers(0, max(1, n // 2)))}")
            for i in range(n)
        ]
        assert grouped_accuracy(grouped, "figure_id") <= accuracy(grouped) + 1e-12
    _report("metrics (confusion-matrix fixture exact, grouped accuracy bounded by plain accuracy)")
