"""Command-line interface.

Subcommands: run, filter, dedup, classify, decontam, stats, sweep, plus
train-scorer for producing built-in classifier model files. Exit codes:
0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import gzip
import json
import logging
import os
import sys
from dataclasses import replace
from typing import Iterator

from webcurate import decontam as decontam_mod
from webcurate import pipeline
from webcurate.corpus import Document, ParseFailure, Verdict, document_to_json, read_jsonl, rejected_to_json
from webcurate.dedup import ShingleConfig, run_dedup
from webcurate.errors import ConfigError, PipelineError
from webcurate.qualitygate import (
    BinThresholds,
    LabeledExample,
    NgramScorerModel,
    ScorerTrainConfig,
    SweepResult,
    gate,
    sweep_thresholds,
    train_ngram_scorer,
)
from webcurate.stats import render_contamination_figure, render_stats_figure, render_stats_table, render_sweep_figure

log = logging.getLogger("webcurate")


def _add_io_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", action="append", required=True, metavar="PATH",
                        help="input JSONL file (repeatable; .gz accepted)")
    parser.add_argument("--output-dir", required=True, metavar="DIR")


def _add_run_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="YAML", help="pipeline config file")
    parser.add_argument("--preset", choices=pipeline.PRESETS, help="stage activation profile")
    parser.add_argument("--input", action="append", metavar="PATH", help="input JSONL (repeatable)")
    parser.add_argument("--output-dir", metavar="DIR")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--deterministic", dest="deterministic", action="store_true", default=None)
    parser.add_argument("--no-deterministic", dest="deterministic", action="store_false")
    parser.add_argument("--figures", dest="figures", action="store_true", default=None)
    parser.add_argument("--no-figures", dest="figures", action="store_false")


def _build_config(args: argparse.Namespace, force_core_only: bool = False) -> pipeline.PipelineConfig:
    if args.config:
        config = pipeline.PipelineConfig.from_yaml(args.config)
    else:
        config = pipeline.PipelineConfig()
    overrides = {}
    if args.preset:
        overrides["preset"] = args.preset
    if args.input:
        overrides["inputs"] = tuple(args.input)
    if args.output_dir:
        overrides["output_dir"] = args.output_dir
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.deterministic is not None:
        overrides["deterministic"] = args.deterministic
    if args.figures is not None:
        overrides["figures"] = args.figures
    if force_core_only:
        overrides["dedup"] = replace(config.dedup, enabled=False)
        overrides["gate"] = replace(config.gate, enabled=False)
        overrides["decontam"] = replace(config.decontam, enabled=False)
    if overrides:
        config = replace(config, **overrides)
    return config


class _CountingLines:
    """Line iterator that remembers how many lines it handed out, so
    generated document ids stay unique across input files."""

    def __init__(self, fh):
        self._fh = fh
        self.count = 0

    def __iter__(self):
        for line in self._fh:
            self.count += 1
            yield line


def _iter_documents(paths) -> Iterator[Document]:
    offset = 0
    for path in paths:
        opener = gzip.open if str(path).endswith(".gz") else open
        with opener(path, "rt", encoding="utf-8", errors="replace") as fh:
            counter = _CountingLines(fh)
            for item in read_jsonl(counter, start_ordinal=offset):
                if not isinstance(item, ParseFailure):
                    yield item
            offset += counter.count


def cmd_run(args: argparse.Namespace) -> int:
    config = _build_config(args)
    result = pipeline.run(config)
    print(render_stats_table(result.stats), end="")
    print(f"outputs written to {result.output_dir}")
    return 0


def cmd_filter(args: argparse.Namespace) -> int:
    config = _build_config(args, force_core_only=True)
    result = pipeline.run(config)
    print(render_stats_table(result.stats), end="")
    print(f"outputs written to {result.output_dir}")
    return 0


def cmd_dedup(args: argparse.Namespace) -> int:
    os.makedirs(args.output_dir, exist_ok=True)
    config = ShingleConfig(
        ngram_size=args.ngram_size,
        dup_shingle_threshold=args.dup_threshold,
        doc_fallback_para_threshold=args.doc_threshold,
        mode=args.mode,
    )
    max_bytes = int(args.max_gb * 1e9) if args.max_gb else None
    kept_path = os.path.join(args.output_dir, "kept.jsonl")
    with open(kept_path, "w", encoding="utf-8") as out:
        _, stats = run_dedup(
            _iter_documents(args.input),
            fp_rate=args.fp_rate,
            expected_ngrams=args.expected_ngrams,
            config=config,
            max_bytes=max_bytes,
            out_stream=out,
        )
    stats_path = os.path.join(args.output_dir, "dedup_stats.json")
    with open(stats_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(stats.to_dict(), indent=2) + "\n")
    print(json.dumps(stats.to_dict(), indent=2))
    return 0


def cmd_classify(args: argparse.Namespace) -> int:
    os.makedirs(args.output_dir, exist_ok=True)
    scorer_dclm = NgramScorerModel.load(args.scorer_dclm)
    scorer_betr = NgramScorerModel.load(args.scorer_betr)
    thresholds = BinThresholds(args.tau_dclm, args.tau_betr)
    kept_path = os.path.join(args.output_dir, "kept.jsonl")
    rejected_path = os.path.join(args.output_dir, "rejected.jsonl")
    scores_path = os.path.join(args.output_dir, "scores.jsonl")
    docs_in = kept = 0
    tokens_in = tokens_kept = 0
    with open(kept_path, "w", encoding="utf-8") as kept_fh, \
            open(rejected_path, "w", encoding="utf-8") as rej_fh, \
            open(scores_path, "w", encoding="utf-8") as scores_fh:
        for doc in _iter_documents(args.input):
            docs_in += 1
            tokens = doc.word_count()
            tokens_in += tokens
            decision = gate(doc, scorer_dclm, scorer_betr, thresholds)
            scores_fh.write(json.dumps({
                "id": doc.id,
                "s_dclm": round(decision.s_dclm, 6),
                "s_betr": round(decision.s_betr, 6),
                "accepted": decision.accepted,
                "bins": list(decision.accepting_bins),
            }, sort_keys=True) + "\n")
            if decision.accepted:
                kept += 1
                tokens_kept += tokens
                kept_fh.write(document_to_json(doc) + "\n")
            else:
                criterion = pipeline.CRITERION_GATE_ERROR if decision.error else pipeline.CRITERION_GATE_REJECT
                rej_fh.write(rejected_to_json(doc, Verdict.reject("quality_gate", criterion)) + "\n")
    summary = {
        "docs_in": docs_in,
        "docs_kept": kept,
        "tokens_in": tokens_in,
        "tokens_kept": tokens_kept,
        "retention_pct": round(100.0 * tokens_kept / tokens_in, 4) if tokens_in else 0.0,
        "tau_dclm": args.tau_dclm,
        "tau_betr": args.tau_betr,
    }
    with open(os.path.join(args.output_dir, "classify_stats.json"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))
    return 0


def cmd_decontam(args: argparse.Namespace) -> int:
    os.makedirs(args.output_dir, exist_ok=True)
    with open(args.benchmarks, "r", encoding="utf-8") as fh:
        refset = decontam_mod.build_reference_from_jsonl(fh, args.ngram_size)
    kept_path = os.path.join(args.output_dir, "kept.jsonl")
    rejected_path = os.path.join(args.output_dir, "rejected.jsonl")
    outcomes = []
    with open(kept_path, "w", encoding="utf-8") as kept_fh, \
            open(rejected_path, "w", encoding="utf-8") as rej_fh:
        for doc in _iter_documents(args.input):
            outcome = decontam_mod.screen(doc, refset, args.min_matches)
            if outcome.contaminated:
                outcomes.append(outcome)
                verdict = Verdict.reject(decontam_mod.STAGE_DECONTAM, pipeline.CRITERION_CONTAMINATED)
                rej_fh.write(rejected_to_json(doc, verdict) + "\n")
            else:
                kept_fh.write(document_to_json(doc) + "\n")
    rep = decontam_mod.report(outcomes, benchmarks=refset.benchmarks)
    with open(os.path.join(args.output_dir, "decontam_report.json"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(rep.to_dict(), indent=2) + "\n")
    table = decontam_mod.render_report_table(rep)
    with open(os.path.join(args.output_dir, "decontam_report.txt"), "w", encoding="utf-8") as fh:
        fh.write(table)
    if not args.no_figures:
        render_contamination_figure(rep, os.path.join(args.output_dir, "decontam_report.png"))
    print(table, end="")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    with open(args.input[0], "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    from webcurate.stats import CriterionStats, RunStats, StageStats

    stats = RunStats(
        parse_failures=payload.get("parse_failures", 0),
        docs_in=payload.get("docs_in", 0),
        initial_tokens=payload.get("initial_tokens", 0),
        retained_docs=payload.get("retained_docs", 0),
        retained_tokens=payload.get("retained_tokens", 0),
        multilingual_docs=payload.get("multilingual_docs", 0),
        multilingual_tokens=payload.get("multilingual_tokens", 0),
    )
    for row in payload.get("stages", []):
        stage = StageStats(stage=row["stage"], kind=row["kind"])
        stage.docs_in = row.get("docs_in", 0)
        stage.docs_removed = row.get("docs_removed", 0)
        stage.tokens_removed = row.get("tokens_removed", 0)
        for name, c in row.get("criteria", {}).items():
            stage.criteria[name] = CriterionStats(docs=c.get("docs", 0), tokens=c.get("tokens", 0))
        stats.stages.append(stage)
    os.makedirs(args.output_dir, exist_ok=True)
    table = render_stats_table(stats)
    with open(os.path.join(args.output_dir, "stats.txt"), "w", encoding="utf-8") as fh:
        fh.write(table)
    if not args.no_figures:
        render_stats_figure(stats, os.path.join(args.output_dir, "stats.png"))
    print(table, end="")
    return 0


def _parse_pairs(arg: str) -> list[tuple[float, float]]:
    pairs = []
    for chunk in arg.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            a, b = chunk.split(":")
            pairs.append((float(a), float(b)))
        except ValueError:
            raise ConfigError(f"bad threshold pair {chunk!r}; expected TAU_DCLM:TAU_BETR") from None
    if not pairs:
        raise ConfigError("no threshold pairs given")
    return pairs


def cmd_sweep(args: argparse.Namespace) -> int:
    pairs = _parse_pairs(args.pairs)
    os.makedirs(args.output_dir, exist_ok=True)

    if args.scores:
        def scored():
            with open(args.scores, "r", encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    row = json.loads(line)
                    yield row["s_dclm"], row["s_betr"], row.get("tokens", 1)
        results = sweep_thresholds(scored(), pairs)
    else:
        if not (args.input and args.scorer_dclm and args.scorer_betr):
            raise ConfigError("sweep needs either --scores or --input with both scorer models")
        scorer_dclm = NgramScorerModel.load(args.scorer_dclm)
        scorer_betr = NgramScorerModel.load(args.scorer_betr)

        def scored():
            for doc in _iter_documents(args.input):
                yield scorer_dclm.score(doc.text), scorer_betr.score(doc.text), doc.word_count()

        results = sweep_thresholds(scored(), pairs)

    table = _render_sweep_table(results)
    with open(os.path.join(args.output_dir, "sweep.json"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps([r.to_dict() for r in results], indent=2) + "\n")
    with open(os.path.join(args.output_dir, "sweep.txt"), "w", encoding="utf-8") as fh:
        fh.write(table)
    if not args.no_figures:
        render_sweep_figure(results, os.path.join(args.output_dir, "sweep.png"))
    print(table, end="")
    return 0


def _render_sweep_table(results: list[SweepResult]) -> str:
    headers = ("tau_DCLM", "tau_BETR", "Docs Kept", "Tokens Kept", "Retention %")
    rows = [
        (f"{r.tau_dclm:g}", f"{r.tau_betr:g}", f"{r.docs_kept:,}/{r.docs_in:,}",
         f"{r.tokens_kept:,}/{r.tokens_in:,}", f"{r.retention_pct:.2f}%")
        for r in results
    ]
    widths = [max(len(headers[i]), *(len(r[i]) for r in rows)) for i in range(5)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
             "  ".join("-" * w for w in widths)]
    for r in rows:
        lines.append("  ".join(r[i].ljust(widths[i]) for i in range(5)))
    return "\n".join(lines) + "\n"


def cmd_train_scorer(args: argparse.Namespace) -> int:
    examples = []
    with open(args.labeled, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            if not line.strip():
                continue
            row = json.loads(line)
            examples.append(LabeledExample(str(row.get("id", i)), row["text"], int(row["label"])))
    config = ScorerTrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        buckets=args.buckets,
        seed=args.seed,
        use_bigrams=not args.no_bigrams,
    )
    model = train_ngram_scorer(examples, config)
    model.save(args.output)
    print(f"trained on {len(examples)} examples; model written to {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="webcurate",
        description="Filter, deduplicate, classify and decontaminate JSONL web corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="full pipeline per preset and config")
    _add_run_args(p_run)
    p_run.set_defaults(func=cmd_run)

    p_filter = sub.add_parser("filter", help="filter stages only (no decontam/dedup/gate)")
    _add_run_args(p_filter)
    p_filter.set_defaults(func=cmd_filter)

    p_dedup = sub.add_parser("dedup", help="Bloom-filter fuzzy deduplication")
    _add_io_args(p_dedup)
    p_dedup.add_argument("--fp-rate", type=float, default=1e-3)
    p_dedup.add_argument("--expected-ngrams", type=float, required=True)
    p_dedup.add_argument("--ngram-size", type=int, default=13)
    p_dedup.add_argument("--dup-threshold", type=float, default=0.80)
    p_dedup.add_argument("--doc-threshold", type=float, default=0.80)
    p_dedup.add_argument("--mode", choices=["oldboth"], default="oldboth")
    p_dedup.add_argument("--max-gb", type=float, default=None, help="refuse filters above this size")
    p_dedup.add_argument("--deterministic", action="store_true", default=True,
                         help="single-pass input order (always on for a single process)")
    p_dedup.set_defaults(func=cmd_dedup)

    p_classify = sub.add_parser("classify", help="dual-bin logical-OR quality gate")
    _add_io_args(p_classify)
    p_classify.add_argument("--scorer-dclm", required=True, metavar="MODEL")
    p_classify.add_argument("--scorer-betr", required=True, metavar="MODEL")
    p_classify.add_argument("--tau-dclm", type=float, default=0.025119)
    p_classify.add_argument("--tau-betr", type=float, default=0.76)
    p_classify.set_defaults(func=cmd_classify)

    p_decontam = sub.add_parser("decontam", help="benchmark n-gram overlap screening")
    _add_io_args(p_decontam)
    p_decontam.add_argument("--benchmarks", required=True, metavar="JSONL",
                            help="reference items {benchmark, instance_id, text}")
    p_decontam.add_argument("--ngram-size", type=int, default=8)
    p_decontam.add_argument("--min-matches", type=int, default=1)
    p_decontam.add_argument("--no-figures", action="store_true")
    p_decontam.set_defaults(func=cmd_decontam)

    p_stats = sub.add_parser("stats", help="render a stats.json into table and figure")
    _add_io_args(p_stats)
    p_stats.add_argument("--no-figures", action="store_true")
    p_stats.set_defaults(func=cmd_stats)

    p_sweep = sub.add_parser("sweep", help="retention for a list of threshold pairs")
    p_sweep.add_argument("--pairs", required=True,
                         help="comma-separated TAU_DCLM:TAU_BETR pairs, e.g. 0.025119:0.76,0.018112:0.7347")
    p_sweep.add_argument("--scores", metavar="JSONL", help="scores sidecar from classify")
    p_sweep.add_argument("--input", action="append", metavar="PATH")
    p_sweep.add_argument("--scorer-dclm", metavar="MODEL")
    p_sweep.add_argument("--scorer-betr", metavar="MODEL")
    p_sweep.add_argument("--output-dir", required=True)
    p_sweep.add_argument("--no-figures", action="store_true")
    p_sweep.set_defaults(func=cmd_sweep)

    p_train = sub.add_parser("train-scorer", help="train the built-in hashed n-gram scorer")
    p_train.add_argument("--labeled", required=True, metavar="JSONL", help="rows {text, label}")
    p_train.add_argument("--output", required=True, metavar="MODEL")
    p_train.add_argument("--lr", type=float, default=0.1)
    p_train.add_argument("--epochs", type=int, default=5)
    p_train.add_argument("--buckets", type=int, default=1 << 21)
    p_train.add_argument("--seed", type=int, default=42)
    p_train.add_argument("--no-bigrams", action="store_true")
    p_train.set_defaults(func=cmd_train_scorer)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (PipelineError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
