"""Command-line pipeline: extract features, pick seeds, discover paths,
answer new questions with retrieved paths, and score the results.

Exit codes: 0 success, 1 usage or path-parse error, 2 data error,
3 backend error.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

import click

from .config import PipelineConfig, library_timestamp, load_config, make_backend
from .dataset import DatasetRecord, load_dataset
from .errors import (
    BackendError,
    DataError,
    EmptyDataset,
    ExtractionFailed,
    PathParseError,
    ReasonPathError,
)
from .evaluation import JudgedResult, format_table, metrics_report
from .executor import (
    guided_answer,
    load_transcripts,
    run_consistency,
    run_fixed_path_eval,
)
from .features import NormalizationStats, apply_normalization, compute_dfv, fit_normalization
from .judging import judge_answer
from .library import Library, LibraryEntry
from .prompts import PromptTemplateSet
from .sampling import max_min_sample, pca_project
from .search import Unsolved, format_path, parse_path, search


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2))
        fh.write("\n")


def _write_jsonl(path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, separators=(",", ":")))
            fh.write("\n")


class _LockedStream:
    """Serializes line writes when worker threads share one trace file."""

    def __init__(self, stream):
        self._stream = stream
        self._lock = threading.Lock()

    def write(self, text):
        with self._lock:
            self._stream.write(text)

    def close(self):
        self._stream.close()


def _templates(config: PipelineConfig) -> PromptTemplateSet:
    if config.templates:
        return PromptTemplateSet.from_file(config.templates)
    return PromptTemplateSet.default()


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON config file; flags below override it.")
@click.option("--backend", "backend_kind", type=click.Choice(["mock", "http"]), default=None)
@click.option("--scripts", type=click.Path(), default=None,
              help="Scripted-response file for the mock backend.")
@click.option("--alpha", type=float, default=None, help="Retrieval difficulty/semantics trade-off.")
@click.option("--k", type=int, default=None, help="Seed count for sample-seeds.")
@click.option("--max-attempts", type=int, default=None, help="Generation budget per search try.")
@click.option("--trace", type=click.Path(), default=None, help="JSON-lines search trace file.")
@click.option("--workers", type=int, default=None, help="Concurrent records; output order is unchanged.")
@click.pass_context
def cli(ctx, config_path, backend_kind, scripts, alpha, k, max_attempts, trace, workers):
    """Difficulty-aware discovery and reuse of structured reasoning paths."""
    config = load_config(config_path)
    if backend_kind is not None:
        config.backend.kind = backend_kind
    if scripts is not None:
        config.backend.scripts = scripts
        config.backend.kind = "mock"
    if alpha is not None:
        try:
            config.retrieval.alpha = alpha
            config.retrieval.__post_init__()
        except ValueError as exc:
            raise click.BadParameter(str(exc), param_hint="--alpha")
    if k is not None:
        if k < 1:
            raise click.BadParameter("k must be >= 1", param_hint="--k")
        config.seed_count = k
    if max_attempts is not None:
        if max_attempts < 1:
            raise click.BadParameter("max-attempts must be >= 1", param_hint="--max-attempts")
        config.cost.max_attempts = max_attempts
    if trace is not None:
        config.trace = trace
    if workers is not None:
        if workers < 1:
            raise click.BadParameter("workers must be >= 1", param_hint="--workers")
        config.workers = workers
    ctx.obj = config


@cli.command("extract-features")
@click.argument("dataset", type=click.Path())
@click.option("-o", "--output", type=click.Path(), required=True, help="Feature rows, JSON lines.")
@click.option("--stats", "stats_path", type=click.Path(), required=True,
              help="Where to write the fitted normalization statistics.")
@click.pass_obj
def extract_features_cmd(config: PipelineConfig, dataset, output, stats_path):
    """Compute the five difficulty features for every record."""
    records = load_dataset(dataset)
    computed = []
    failures = []
    for record in records:
        try:
            computed.append((record, compute_dfv(record), None))
        except (ReasonPathError, OSError, ValueError) as exc:
            computed.append((record, None, str(exc)))
            failures.append(record.id)

    good = [dfv for _, dfv, err in computed if err is None]
    if len(good) < 2:
        raise DataError("need at least 2 readable records to fit normalization stats")
    stats = fit_normalization(good)
    stats.save(stats_path)

    rows = []
    for record, dfv, err in computed:
        if err is not None:
            rows.append({"id": record.id, "error": err})
            continue
        rows.append({
            "id": record.id,
            "fre": dfv.fre,
            "entropy": dfv.entropy,
            "clc": dfv.clc,
            "edge_density": dfv.edge_density,
            "color_diversity": dfv.color_diversity,
            "normalized": list(apply_normalization(dfv, stats)),
        })
    _write_jsonl(output, rows)
    click.echo(f"wrote {len(rows)} feature rows to {output}; stats to {stats_path}")
    if failures:
        for qid in failures:
            click.echo(f"failed record: {qid}", err=True)
        raise DataError(f"{len(failures)} of {len(records)} records failed feature extraction")


@cli.command("sample-seeds")
@click.argument("features", type=click.Path())
@click.option("-o", "--output", type=click.Path(), required=True, help="Selected seed ids, JSON.")
@click.option("--pca-csv", "pca_csv", type=click.Path(), default=None,
              help="Projection CSV (index,x,y,selected); defaults next to the output.")
@click.option("--figure/--no-figure", "want_figure", default=True,
              help="Also render the seed-coverage figure.")
@click.option("--figure-path", type=click.Path(), default=None)
@click.pass_obj
def sample_seeds_cmd(config: PipelineConfig, features, output, pca_csv, want_figure, figure_path):
    """Pick a maximally diverse seed subset and export its PCA projection."""
    try:
        lines = Path(features).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read features {features}: {exc}") from exc

    ids, vectors = [], []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{features}:{lineno}: invalid JSON: {exc}") from exc
        if "error" in row:
            click.echo(f"skipping failed feature row {row.get('id')}", err=True)
            continue
        if "normalized" not in row:
            raise DataError(f"{features}:{lineno}: row has no normalized vector")
        ids.append(str(row["id"]))
        vectors.append([float(x) for x in row["normalized"]])
    if not vectors:
        raise DataError(f"no usable feature rows in {features}")

    selection = max_min_sample(vectors, config.seed_count)
    projection = pca_project(vectors, d=2)

    _write_json(output, {
        "k": config.seed_count,
        "seed_ids": [ids[i] for i in selection.indices],
        "indices": selection.indices,
        "min_pairwise_distance": selection.min_pairwise_distance,
    })

    pca_csv = pca_csv or str(Path(output).with_suffix("")) + "_pca.csv"
    chosen = set(selection.indices)
    with open(pca_csv, "w", encoding="utf-8") as fh:
        fh.write("index,x,y,selected\n")
        for i, (x, y) in enumerate(projection.coordinates):
            fh.write(f"{i},{x!r},{y!r},{1 if i in chosen else 0}\n")

    message = f"selected {len(selection.indices)} seeds; projection in {pca_csv}"
    if want_figure:
        from .plots import render_seed_map

        figure_path = figure_path or str(Path(pca_csv).with_suffix(".png"))
        render_seed_map(projection.coordinates, selection.indices, figure_path)
        message += f"; figure in {figure_path}"
    click.echo(message)


@cli.command("build-library")
@click.argument("dataset", type=click.Path())
@click.option("--seeds", "seeds_path", type=click.Path(), required=True)
@click.option("--stats", "stats_path", type=click.Path(), required=True)
@click.option("-o", "--output", type=click.Path(), required=True, help="Library file, JSON lines.")
@click.option("--report", "report_path", type=click.Path(), default=None,
              help="Sidecar report of solved/unsolved seeds; defaults next to the output.")
@click.pass_obj
def build_library_cmd(config: PipelineConfig, dataset, seeds_path, stats_path, output, report_path):
    """Discover a reasoning path for every seed and persist the solved ones.

    Rerunning with an existing output file skips seeds that are already
    solved, so interrupted builds pick up where they left off.
    """
    records = {r.id: r for r in load_dataset(dataset)}
    try:
        seeds_payload = json.loads(Path(seeds_path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read seeds {seeds_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"seeds {seeds_path} is not valid JSON: {exc}") from exc
    seed_ids = [str(s) for s in seeds_payload.get("seed_ids", [])]
    if not seed_ids:
        raise DataError(f"{seeds_path} lists no seed ids")
    missing = [s for s in seed_ids if s not in records]
    if missing:
        raise DataError(f"seed ids not in dataset: {missing}")
    for sid in seed_ids:
        if records[sid].answer is None:
            raise DataError(f"seed {sid} has no answer key; library building is supervised")

    stats = NormalizationStats.load(stats_path)
    backend = make_backend(config)
    templates = _templates(config)
    timestamp = library_timestamp(config)

    existing = Library.load(output) if Path(output).exists() else None
    solved_already = existing.ids() if existing else set()
    pending = [records[sid] for sid in seed_ids if sid not in solved_already]
    skipped = [sid for sid in seed_ids if sid in solved_already]

    trace_stream = None
    if config.trace:
        trace_stream = _LockedStream(open(config.trace, "w", encoding="utf-8"))

    def solve(record: DatasetRecord):
        outcome = search(
            record, backend, config.cost,
            templates=templates, params=config.build_generation, trace=trace_stream,
        )
        if isinstance(outcome, Unsolved):
            return outcome
        dfv = compute_dfv(record)
        embedding = backend.embed(record.question)
        return LibraryEntry(
            question_id=record.id,
            question=record.question,
            dfv_raw=dfv.raw(),
            dfv_normalized=apply_normalization(dfv, stats),
            embedding=embedding.tolist(),
            path=outcome.functions,
            answer=outcome.answer,
            attempts=outcome.attempts,
            created_at=timestamp,
            backend=backend.name,
        )

    try:
        if config.workers > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                outcomes = list(pool.map(solve, pending))
        else:
            outcomes = [solve(record) for record in pending]
    finally:
        if trace_stream is not None:
            trace_stream.close()

    entries = [o for o in outcomes if isinstance(o, LibraryEntry)]
    unsolved = [o.question_id for o in outcomes if isinstance(o, Unsolved)]

    if existing:
        library = existing
        for entry in entries:
            library.append(entry)
    else:
        dim = len(entries[0].embedding) if entries else backend.embed(
            records[seed_ids[0]].question).dim
        library = Library(stats, dim, entries)
    library.save(output)

    report_path = report_path or str(Path(output).with_suffix("")) + "_report.json"
    _write_json(report_path, {
        "solved": [e.question_id for e in entries],
        "skipped": skipped,
        "unsolved": unsolved,
    })
    click.echo(
        f"library {output}: {len(library)} entries "
        f"({len(entries)} new, {len(skipped)} skipped, {len(unsolved)} unsolved)"
    )


@cli.command("infer")
@click.argument("dataset", type=click.Path(), required=False)
@click.option("--library", "library_path", type=click.Path(), required=True)
@click.option("-o", "--output", type=click.Path(), required=True, help="Transcripts, JSON lines.")
@click.option("--question", "question_text", default=None, help="Answer a single ad-hoc question.")
@click.option("--image", "image_path", type=click.Path(), default=None)
@click.option("--format", "question_format", type=click.Choice(["mcqa", "yesno", "numeric", "open"]),
              default="open")
@click.option("--choices", "choices_text", default=None, help="Pipe-separated options for mcqa.")
@click.pass_obj
def infer_cmd(config: PipelineConfig, dataset, library_path, output, question_text,
              image_path, question_format, choices_text):
    """Retrieve the best stored path for each question and execute it."""
    if (dataset is None) == (question_text is None):
        raise click.UsageError("provide either a dataset path or --question, not both")
    if dataset is not None:
        records = load_dataset(dataset)
    else:
        record = DatasetRecord(
            id="q0",
            question=question_text,
            format=question_format,
            image=str(Path(image_path).resolve()) if image_path else None,
            choices=choices_text.split("|") if choices_text else None,
        )
        record.validate()
        records = [record]

    library = Library.load(library_path)
    backend = make_backend(config)
    templates = _templates(config)

    def answer(record: DatasetRecord):
        try:
            return guided_answer(
                record, library, backend,
                retrieval=config.retrieval, templates=templates,
                params=config.eval_generation, budgets=config.cost.budgets,
            )
        except ExtractionFailed as exc:
            click.echo(f"no parseable answer for {record.id}", err=True)
            return exc.transcript

    if config.workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            transcripts = list(pool.map(answer, records))
    else:
        transcripts = [answer(record) for record in records]

    _write_jsonl(output, [t.to_dict() for t in transcripts])
    for t in transcripts:
        click.echo(f"{t.question_id}: {t.extracted if t.extracted is not None else '(no answer)'} "
                   f"[path {format_path(t.path)} from {t.retrieved_from}]")


@cli.command("eval")
@click.argument("transcripts", type=click.Path())
@click.argument("dataset", type=click.Path())
@click.option("-o", "--output", type=click.Path(), required=True, help="Metric report, JSON.")
@click.option("--figure", "figure_path", type=click.Path(), default=None,
              help="Also render the ratio metrics as a bar chart.")
@click.pass_obj
def eval_cmd(config: PipelineConfig, transcripts, dataset, output, figure_path):
    """Score transcripts against the dataset's answer keys."""
    rows = load_transcripts(transcripts)
    if not rows:
        raise EmptyDataset(f"no transcripts in {transcripts}")
    by_id = {r.id: r for r in load_dataset(dataset)}

    results = []
    for t in rows:
        record = by_id.get(t.question_id)
        if record is None:
            raise DataError(f"transcript {t.question_id} has no matching dataset record")
        if record.answer is None:
            raise DataError(f"record {record.id} has no answer key")
        verdict = judge_answer(record, t.final_text)
        results.append(JudgedResult(
            question_id=record.id,
            predicted=verdict.extracted,
            reference=record.answer,
            correct=verdict.correct,
            format=record.format,
            figure_id=record.figure_id,
            question_group_id=record.question_group_id,
        ))

    report = metrics_report(results)
    _write_json(output, report)
    click.echo(format_table(report))
    if figure_path:
        from .plots import render_metric_bars

        ratios = {k: v for k, v in report.items()
                  if k not in ("total", "correct") and isinstance(v, float)}
        render_metric_bars(ratios, figure_path, "Evaluation metrics")


@cli.command("consistency")
@click.argument("dataset", type=click.Path())
@click.option("-o", "--output", type=click.Path(), required=True, help="Transition report, JSON.")
@click.option("--figure", "figure_path", type=click.Path(), default=None)
@click.pass_obj
def consistency_cmd(config: PipelineConfig, dataset, output, figure_path):
    """Two-round answer stability under the fixed reflect-and-retry path."""
    records = load_dataset(dataset)
    backend = make_backend(config)
    report = run_consistency(
        records, backend, templates=_templates(config),
        params=config.eval_generation, budgets=config.cost.budgets,
        workers=config.workers,
    )
    _write_json(output, report.to_dict())
    click.echo(format_table({"total": report.total, **report.ratios}))
    if figure_path:
        from .plots import render_metric_bars

        render_metric_bars(report.ratios, figure_path, "Two-round answer transitions")


@cli.command("fixed-path")
@click.argument("dataset", type=click.Path())
@click.option("--path", "path_text", default=None, help='Path like "SA() RR() RR()".')
@click.option("--vanilla", is_flag=True, help="Single direct prompt, no path.")
@click.option("-o", "--output", type=click.Path(), required=True, help="Accuracy report, JSON.")
@click.pass_obj
def fixed_path_cmd(config: PipelineConfig, dataset, path_text, vanilla, output):
    """Accuracy of one fixed reasoning path over a keyed dataset."""
    if vanilla == (path_text is not None):
        raise click.UsageError("provide exactly one of --path or --vanilla")
    path = None if vanilla else parse_path(path_text)
    records = load_dataset(dataset)
    backend = make_backend(config)
    report = run_fixed_path_eval(
        records, path, backend, templates=_templates(config),
        params=config.eval_generation, budgets=config.cost.budgets,
        workers=config.workers,
    )
    _write_json(output, report.to_dict())
    click.echo(format_table({
        "path": report.path, "total": report.total,
        "correct": report.correct, "accuracy": report.accuracy,
    }))


def main(argv=None) -> int:
    """Entry point with explicit exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except PathParseError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except BackendError as exc:
        click.echo(f"backend error: {exc}", err=True)
        return 3
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except SystemExit as exc:  # raised by ctx.exit
        return int(exc.code or 0)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
