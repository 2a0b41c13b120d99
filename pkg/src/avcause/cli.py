"""Command-line orchestration for the incident classification pipeline.

Exit codes: 0 success, 2 invalid configuration or usage, 1 partial pipeline
failure (for classify: some records failed after retries; successes are still
written). Every subcommand is re-runnable; classification reruns are served
from the checkpoint instead of the inference server.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from . import aggregate as agg
from . import baselines, inference, ingest, scoring
from .prompting import DEFAULT_MAX_CONTEXT_CHARS, DecodingParams, PromptTemplate
from .review_service import ReviewStore, ReviewService, assign_cases, create_app
from .taxonomy import DIMENSIONS, read_records, write_records

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2

ENV_ENDPOINT = "AVCAUSE_ENDPOINT_URL"
ENV_MODEL = "AVCAUSE_MODEL"


class ConfigError(Exception):
    pass


@dataclass
class PipelineConfig:
    endpoint_url: str = inference.DEFAULT_ENDPOINT
    model_name: str = inference.DEFAULT_MODEL
    temperature: float = 0.0
    top_p: float = 1.0
    max_output_tokens: int = 1024
    request_timeout: float = 120.0
    max_retries: int = 3
    parallelism: int = 1
    max_context_chars: int = DEFAULT_MAX_CONTEXT_CHARS
    seed: int = 7
    redaction_markers: list[str] = field(
        default_factory=lambda: list(ingest.DEFAULT_REDACTION_MARKERS)
    )
    template_path: str | None = None
    keyword_rules_path: str | None = None
    rear_end_patterns_path: str | None = None

    def model_config(self) -> inference.ModelConfig:
        return inference.ModelConfig(
            endpoint_url=self.endpoint_url,
            model_name=self.model_name,
            decoding=DecodingParams(
                temperature=self.temperature,
                top_p=self.top_p,
                max_output_tokens=self.max_output_tokens,
            ),
            request_timeout=self.request_timeout,
            max_retries=self.max_retries,
            max_context_chars=self.max_context_chars,
        )


_PATH_KEYS = ("template_path", "keyword_rules_path", "rear_end_patterns_path")


def load_config(path: str | None) -> PipelineConfig:
    """Config file -> env overrides -> defaults. Unknown keys are rejected."""
    config = PipelineConfig()
    if path is not None:
        try:
            raw = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        data = yaml.safe_load(raw) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must be a key-value mapping")
        known = {f.name for f in fields(PipelineConfig)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        for key, value in data.items():
            setattr(config, key, value)
        for key in _PATH_KEYS:
            value = getattr(config, key)
            if value is not None and not Path(value).exists():
                raise ConfigError(f"config {key} points to a missing file: {value}")
    if os.environ.get(ENV_ENDPOINT):
        config.endpoint_url = os.environ[ENV_ENDPOINT]
    if os.environ.get(ENV_MODEL):
        config.model_name = os.environ[ENV_MODEL]
    return config


def _template(config: PipelineConfig) -> PromptTemplate:
    if config.template_path:
        return PromptTemplate.from_file(config.template_path)
    return PromptTemplate.default()


def _cmd_ingest(args: argparse.Namespace, config: PipelineConfig) -> int:
    paths: list[Path] = []
    category_map: dict[str, str] = {}
    for flag, category in (
        ("ads", ingest.CATEGORY_ADS),
        ("adas", ingest.CATEGORY_ADAS),
        ("other", ingest.CATEGORY_OTHER),
    ):
        for raw in getattr(args, flag) or []:
            path = Path(raw)
            paths.append(path)
            category_map[str(path)] = category
    if not paths:
        raise ConfigError("ingest needs at least one of --ads/--adas/--other")

    markers = tuple(args.redaction_marker or config.redaction_markers)
    reports = ingest.merge_sources(paths, category_map)
    outcome = ingest.filter_and_unify(reports, markers)
    ingest.write_unified(outcome.kept, args.out)

    if args.dropped:
        with open(args.dropped, "w", encoding="utf-8") as fh:
            fh.write("report_id,reason\n")
            for entry in outcome.dropped:
                fh.write(f"{entry.report_id},{entry.reason}\n")

    originals: dict[str, int] = {}
    kept_counts: dict[str, int] = {}
    for report in reports:
        originals[report.category] = originals.get(report.category, 0) + 1
    for record in outcome.kept:
        kept_counts[record.category] = kept_counts.get(record.category, 0) + 1
    print("category,original,kept")
    for category in ingest.CATEGORIES:
        if originals.get(category, 0):
            print(f"{category},{originals.get(category, 0)},{kept_counts.get(category, 0)}")
    print(f"total,{len(reports)},{len(outcome.kept)}")
    return EXIT_OK


def _cmd_classify(args: argparse.Namespace, config: PipelineConfig) -> int:
    records = ingest.read_unified(args.input)
    checkpoint = args.checkpoint or f"{args.out}.checkpoint"
    outcomes = inference.run_batch(
        records,
        config.model_config(),
        _template(config),
        parallelism=config.parallelism,
        checkpoint_path=checkpoint,
    )
    write_records([o.record for o in outcomes if o.ok], args.out)
    failures = [o for o in outcomes if not o.ok]
    for outcome in failures:
        print(
            f"error: report {outcome.report_id}: {outcome.failure} "
            f"after {outcome.attempts} attempt(s)",
            file=sys.stderr,
        )
    return EXIT_PARTIAL if failures else EXIT_OK


def _cmd_baseline(args: argparse.Namespace, config: PipelineConfig) -> int:
    records = ingest.read_unified(args.input)
    if args.kind == "majority":
        if not args.classified:
            raise ConfigError("baseline --kind majority needs --classified")
        priors = baselines.compute_priors(read_records(args.classified))
        predictions = [baselines.majority_predict(r.report_id, priors) for r in records]
    else:
        rules_path = args.rules or config.keyword_rules_path
        rules = baselines.load_rules(rules_path) if rules_path else baselines.default_rules()
        predictions = [baselines.keyword_predict(r, rules) for r in records]
    write_records(predictions, args.out)
    print(f"wrote {len(predictions)} {args.kind} predictions to {args.out}")
    return EXIT_OK


def _cmd_score(args: argparse.Namespace, config: PipelineConfig) -> int:
    reviews = scoring.read_reviews(args.reviews)
    outputs = read_records(args.outputs)
    gold = scoring.derive_gold(reviews, outputs)
    reports = [("llm", scoring.score(outputs, gold))]
    for spec_text in args.compare or []:
        name, _, path = spec_text.partition("=")
        if not path:
            raise ConfigError(f"--compare expects name=path, got {spec_text!r}")
        reports.append((name, scoring.score(read_records(path), gold)))
    table = scoring.score_table(reports)
    if args.out:
        Path(args.out).write_text(table, encoding="utf-8")
    print(table, end="")
    return EXIT_OK


def _cmd_agree(args: argparse.Namespace, config: PipelineConfig) -> int:
    reviews = scoring.read_reviews(args.reviews)
    agreement = scoring.reviewer_agreement(reviews)
    print("dimension,agreement,insufficient")
    for dim in DIMENSIONS:
        rate = scoring.insufficient_rate(reviews, dim)
        print(f"{dim},{100.0 * agreement[dim]:.1f},{100.0 * rate:.1f}")
    return EXIT_OK


def _load_patterns(path: str | None) -> tuple[str, ...]:
    if not path:
        return agg.DEFAULT_REAR_END_PATTERNS
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    patterns = tuple(
        line.strip() for line in lines if line.strip() and not line.lstrip().startswith("#")
    )
    if not patterns:
        raise ConfigError(f"no patterns found in {path}")
    return patterns


def _cmd_aggregate(args: argparse.Namespace, config: PipelineConfig) -> int:
    records = read_records(args.input)
    unified = ingest.read_unified(args.unified)
    patterns = _load_patterns(args.rear_end_patterns or config.rear_end_patterns_path)
    flags = agg.rear_end_flags(unified, patterns)
    histogram = agg.pattern_histogram(unified, patterns)
    stats = agg.compute_stats(records, flags, rear_end_pattern_counts=histogram)
    written = agg.emit_report(stats, args.out_dir)
    for path in written:
        print(f"wrote {path}")
    print(f"late AI response rate: {stats.percent(stats.late_count)}")
    return EXIT_OK


def _cmd_review_serve(args: argparse.Namespace, config: PipelineConfig) -> int:
    import uvicorn

    cases = ingest.read_unified(args.cases)
    outputs = read_records(args.outputs)
    reviewers = [r.strip() for r in args.reviewers.split(",") if r.strip()]
    assignment = assign_cases(
        [c.report_id for c in cases], reviewers, overlap=args.overlap, seed=args.seed
    )
    store = ReviewStore(args.store)
    service = ReviewService(cases, outputs, assignment, store)
    app = create_app(service)
    if args.ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=args.ui_dir, html=True), name="ui")
    logger.info("serving reviews for %d cases on port %d", len(cases), args.port)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def _cmd_export(args: argparse.Namespace, config: PipelineConfig) -> int:
    store = ReviewStore(args.store)
    try:
        reviews = store.records()
        scoring.write_reviews(reviews, args.out)
    finally:
        store.close()
    print(f"exported {len(reviews)} reviews to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avcause",
        description="Classify AV incident reports and analyze the results.",
    )
    parser.add_argument("--config", help="YAML pipeline configuration file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="merge and filter incident CSV exports")
    p.add_argument("--ads", action="append", help="ADS incident CSV (repeatable)")
    p.add_argument("--adas", action="append", help="ADAS incident CSV (repeatable)")
    p.add_argument("--other", action="append", help="other-category incident CSV (repeatable)")
    p.add_argument("--out", required=True, help="unified corpus JSONL output")
    p.add_argument(
        "--redaction-marker",
        action="append",
        help="extra narrative redaction marker (repeatable)",
    )
    p.add_argument("--dropped", help="optional CSV listing dropped report ids and reasons")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("classify", help="classify a unified corpus via the model endpoint")
    p.add_argument("--in", dest="input", required=True, help="unified corpus JSONL")
    p.add_argument("--out", required=True, help="classified corpus JSONL output")
    p.add_argument("--checkpoint", help="checkpoint file (default: <out>.checkpoint)")
    p.add_argument("--endpoint", help="inference endpoint URL override")
    p.add_argument("--model", help="model name override")
    p.add_argument("--parallelism", type=int, help="worker pool size override")
    p.add_argument("--max-retries", type=int, help="retry budget override")
    p.add_argument("--timeout", type=float, help="request timeout override (seconds)")
    p.add_argument("--template", help="prompt template file override")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("baseline", help="run a reference predictor over the corpus")
    p.add_argument("--kind", choices=("majority", "keyword"), required=True)
    p.add_argument("--in", dest="input", required=True, help="unified corpus JSONL")
    p.add_argument("--out", required=True, help="prediction JSONL output")
    p.add_argument("--classified", help="classified corpus for majority priors")
    p.add_argument("--rules", help="keyword rule TSV (default: packaged rules)")
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("score", help="score predictions against expert reviews")
    p.add_argument("--reviews", required=True, help="review JSONL")
    p.add_argument("--outputs", required=True, help="classified corpus the reviews judged")
    p.add_argument(
        "--compare",
        action="append",
        help="extra prediction set to score, as name=path (repeatable)",
    )
    p.add_argument("--out", help="write the score table CSV here as well")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("agree", help="reviewer agreement over doubly-reviewed cases")
    p.add_argument("--reviews", required=True, help="review JSONL")
    p.set_defaults(func=_cmd_agree)

    p = sub.add_parser("aggregate", help="corpus-level statistics and report files")
    p.add_argument("--in", dest="input", required=True, help="classified corpus JSONL")
    p.add_argument("--unified", required=True, help="unified corpus JSONL (for rear-end flags)")
    p.add_argument("--out-dir", required=True, help="directory for report files")
    p.add_argument("--rear-end-patterns", help="pattern file, one regex per line")
    p.set_defaults(func=_cmd_aggregate)

    review = sub.add_parser("review", help="expert review service")
    review_sub = review.add_subparsers(dest="review_command", required=True)
    p = review_sub.add_parser("serve", help="serve the review API")
    p.add_argument("--cases", required=True, help="unified corpus JSONL of cases to review")
    p.add_argument("--outputs", required=True, help="classified corpus JSONL")
    p.add_argument("--reviewers", required=True, help="comma-separated reviewer ids")
    p.add_argument("--overlap", type=int, default=10)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--store", default="review_store.jsonl", help="durable review log path")
    p.add_argument("--ui-dir", help="serve a static review UI from this directory")
    p.set_defaults(func=_cmd_review_serve)

    p = sub.add_parser("export", help="export the review log as plain review JSONL")
    p.add_argument("--store", required=True, help="durable review log path")
    p.add_argument("--out", required=True, help="review JSONL output")
    p.set_defaults(func=_cmd_export)

    return parser


def _apply_flag_overrides(args: argparse.Namespace, config: PipelineConfig) -> None:
    overrides = {
        "endpoint": "endpoint_url",
        "model": "model_name",
        "parallelism": "parallelism",
        "max_retries": "max_retries",
        "timeout": "request_timeout",
        "template": "template_path",
    }
    for flag, key in overrides.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(config, key, value)
    if getattr(args, "template", None) and not Path(args.template).exists():
        raise ConfigError(f"template file not found: {args.template}")


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s] %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config(args.config)
        _apply_flag_overrides(args, config)
        return args.func(args, config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:   # operational failure: bad inputs, IO, invalid data
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
