"""Pipeline orchestration: presets, configuration, per-stage accounting.

Document flow: decontamination (corpus scope) -> URL stages -> language
routing -> document-level gates -> line cleaning + integrity gate -> shared
Bloom-filter dedup -> dual-bin classifier gate. Presets activate the filter
stages; dedup, the gate and decontamination are switched by their own
config sections.

Rejection at any stage is unconditional and attributed to exactly one
criterion. Deterministic mode produces byte-identical outputs for any
worker count.
"""

from __future__ import annotations

import json
import logging
import multiprocessing
import os
import time
from dataclasses import dataclass, field, fields, replace
from typing import IO, Iterable, Iterator

import yaml

from webcurate import decontam as decontam_mod
from webcurate import docquality, langid, lineclean, urlfilters
from webcurate.corpus import (
    Document,
    ParseFailure,
    Verdict,
    document_to_json,
    rejected_to_json,
)
from webcurate.dedup import STAGE_DEDUP, BloomFilter, DedupStats, ShingleConfig, dedup_document
from webcurate.errors import ConfigError
from webcurate.qualitygate import STAGE_GATE, BinThresholds, NgramScorerModel, gate
from webcurate.stats import (
    KIND_FILTER,
    KIND_MODIFIER,
    RunStats,
    StageStats,
    render_stats_figure,
    render_stats_table,
)
from webcurate.wordlists import DEFAULT_TLDS, ENGLISH_STOP_WORDS, load_terms

log = logging.getLogger(__name__)

PRESET_URL_LID = "url-lid"
PRESET_DOC_FILTER = "doc-filter"
PRESET_LINE_CLEAN = "line-clean"
PRESET_FLUX = "flux"
PRESETS = (PRESET_URL_LID, PRESET_DOC_FILTER, PRESET_LINE_CLEAN, PRESET_FLUX)

# Filter-stage activation per preset. The URL stages, the two content
# modifiers and language identification are active everywhere.
_DOC_GATE_PRESETS = (PRESET_DOC_FILTER, PRESET_LINE_CLEAN, PRESET_FLUX)
_BADWORDS_PRESETS = (PRESET_DOC_FILTER, PRESET_LINE_CLEAN)
_LINE_PRESETS = (PRESET_LINE_CLEAN, PRESET_FLUX)

CRITERION_ROUTED = "RoutedMultilingual"
CRITERION_CONTAMINATED = "BenchmarkOverlap"
CRITERION_DUP_DOC = "DuplicateDocument"
CRITERION_DUP_PARAGRAPHS = "DuplicateParagraphs"
CRITERION_GATE_REJECT = "BelowBothThresholds"
CRITERION_GATE_ERROR = "ScorerError"

# Rejection gates that may be switched off individually via disabled_stages.
_DISABLEABLE_STAGES = frozenset((
    urlfilters.STAGE_BLOCKLIST,
    urlfilters.STAGE_STRICT,
    urlfilters.STAGE_HARD,
    urlfilters.STAGE_SOFT,
    docquality.STAGE_GOPHER_QUALITY,
    docquality.STAGE_NEMO,
    docquality.STAGE_GOPHER_REPETITION,
    docquality.STAGE_BADWORDS,
    docquality.STAGE_CUSTOM_QUALITY,
    lineclean.STAGE_WORD_REMOVAL,
))


@dataclass(frozen=True)
class DedupConfig:
    enabled: bool = True
    fp_rate: float = 1e-3
    expected_ngrams: float = 50_000_000
    ngram_size: int = 13
    dup_shingle_threshold: float = 0.80
    doc_fallback_para_threshold: float = 0.80
    mode: str = "oldboth"
    max_bytes: int | None = None

    def shingle_config(self) -> ShingleConfig:
        return ShingleConfig(
            ngram_size=self.ngram_size,
            dup_shingle_threshold=self.dup_shingle_threshold,
            doc_fallback_para_threshold=self.doc_fallback_para_threshold,
            mode=self.mode,
        )


@dataclass(frozen=True)
class GateConfig:
    enabled: bool = False
    scorer_dclm_path: str | None = None
    scorer_betr_path: str | None = None
    tau_dclm: float = 0.025119
    tau_betr: float = 0.76
    emit_scores: bool = False


@dataclass(frozen=True)
class DecontamConfig:
    enabled: bool = False
    benchmarks_path: str | None = None
    ngram_size: int = 8
    min_matches: int = 1


@dataclass(frozen=True)
class PipelineConfig:
    preset: str = PRESET_FLUX
    inputs: tuple[str, ...] = ()
    output_dir: str = "out"
    deterministic: bool = True
    workers: int = 1
    batch_size: int = 256
    figures: bool = True

    blocklist_path: str | None = None
    strict_terms_path: str | None = None
    hard_terms_path: str | None = None
    soft_terms_path: str | None = None
    tld_list_path: str | None = None
    badwords_path: str | None = None
    custom_stop_words_path: str | None = None

    lid_strategy: str = langid.STRATEGY_WHOLE_DOC
    lid_threshold: float = 0.65

    # Per-gate threshold overrides, field name -> value.
    gopher_quality: dict = field(default_factory=dict)
    nemo: dict = field(default_factory=dict)
    gopher_repetition: dict = field(default_factory=dict)
    custom_quality: dict = field(default_factory=dict)
    line_heuristics: dict = field(default_factory=dict)
    word_removal_max_ratio: float = 0.05
    disabled_stages: tuple[str, ...] = ()

    dedup: DedupConfig = field(default_factory=DedupConfig)
    gate: GateConfig = field(default_factory=GateConfig)
    decontam: DecontamConfig = field(default_factory=DecontamConfig)

    def __post_init__(self) -> None:
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; expected one of {PRESETS}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        unknown = set(self.disabled_stages) - _DISABLEABLE_STAGES
        if unknown:
            raise ConfigError(
                f"disabled_stages contains unknown or non-disableable stages: {sorted(unknown)}"
            )

    @classmethod
    def from_yaml(cls, path: str) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(raw)
        if "inputs" in kwargs and kwargs["inputs"] is not None:
            kwargs["inputs"] = tuple(kwargs["inputs"])
        if "disabled_stages" in kwargs and kwargs["disabled_stages"] is not None:
            kwargs["disabled_stages"] = tuple(kwargs["disabled_stages"])
        for key, sub in (("dedup", DedupConfig), ("gate", GateConfig), ("decontam", DecontamConfig)):
            if key in kwargs and isinstance(kwargs[key], dict):
                sub_known = {f.name for f in fields(sub)}
                sub_unknown = set(kwargs[key]) - sub_known
                if sub_unknown:
                    raise ConfigError(f"unknown {key} config keys: {sorted(sub_unknown)}")
                kwargs[key] = sub(**kwargs[key])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def _override(dc, overrides: dict, section: str):
    if not overrides:
        return dc
    valid = {f.name for f in fields(dc)}
    unknown = set(overrides) - valid
    if unknown:
        raise ConfigError(f"unknown {section} threshold keys: {sorted(unknown)}")
    return replace(dc, **overrides)


@dataclass
class StagePlan:
    """Everything a worker needs to process documents; must stay picklable."""

    preset: str
    blocklist: urlfilters.DomainBlocklist
    strict_lexicon: urlfilters.SubstringLexicon
    hard_lexicon: urlfilters.SubstringLexicon
    soft_lexicon: urlfilters.SubstringLexicon
    url_matcher: urlfilters.UrlTokenMatcher
    lid_config: langid.LidConfig
    lid_scorer: langid.LanguageScorer
    gq_thresholds: docquality.GopherQualityThresholds
    nemo_thresholds: docquality.NemoThresholds
    rep_thresholds: docquality.RepetitionThresholds
    cq_thresholds: docquality.CustomQualityThresholds
    custom_stop_words: frozenset
    badwords: docquality.BadwordsFilter | None
    line_config: lineclean.LineHeuristicConfig | None
    wrr_gate: lineclean.WordRemovalGate | None
    refset: decontam_mod.ReferenceSet | None
    decontam_min_matches: int = 1
    disabled: frozenset = frozenset()

    @property
    def doc_gates_active(self) -> bool:
        return self.preset in _DOC_GATE_PRESETS

    def stage_active(self, stage: str) -> bool:
        return stage not in self.disabled

    def stage_schema(self, with_dedup: bool, with_gate: bool) -> list[tuple[str, str]]:
        """Ordered (stage, kind) rows for this plan's active stages."""
        rows: list[tuple[str, str]] = []
        if self.refset is not None:
            rows.append((decontam_mod.STAGE_DECONTAM, KIND_FILTER))
        rows += [
            (urlfilters.STAGE_BLOCKLIST, KIND_FILTER),
            (urlfilters.STAGE_STRICT, KIND_FILTER),
            (urlfilters.STAGE_HARD, KIND_FILTER),
            (urlfilters.STAGE_SOFT, KIND_FILTER),
            (urlfilters.STAGE_URL_STRIP, KIND_MODIFIER),
            (urlfilters.STAGE_NEWLINE, KIND_MODIFIER),
            (langid.STAGE_LANGID, KIND_FILTER),
        ]
        if self.doc_gates_active:
            rows += [
                (docquality.STAGE_GOPHER_QUALITY, KIND_FILTER),
                (docquality.STAGE_NEMO, KIND_FILTER),
                (docquality.STAGE_GOPHER_REPETITION, KIND_FILTER),
            ]
        if self.badwords is not None:
            rows.append((docquality.STAGE_BADWORDS, KIND_FILTER))
        if self.line_config is not None:
            rows.append((docquality.STAGE_CUSTOM_QUALITY, KIND_FILTER))
            rows.append((lineclean.STAGE_LINE_CLEAN, KIND_MODIFIER))
            rows.append((lineclean.STAGE_WORD_REMOVAL, KIND_FILTER))
        rows = [(stage, kind) for stage, kind in rows if stage not in self.disabled]
        if with_dedup:
            rows.append((STAGE_DEDUP, KIND_FILTER))
        if with_gate:
            rows.append((STAGE_GATE, KIND_FILTER))
        return rows


def build_plan(config: PipelineConfig, lid_scorer: langid.LanguageScorer | None = None) -> StagePlan:
    """Load and validate every resource the active stages need.

    All missing files are reported together in one error.
    """
    missing = [
        p for p in (
            config.blocklist_path, config.strict_terms_path, config.hard_terms_path,
            config.soft_terms_path, config.tld_list_path, config.custom_stop_words_path,
        )
        if p and not os.path.exists(p)
    ]

    # The badwords stage exists in its presets even with an empty lexicon,
    # so their stats row presence matches the preset's stage set.
    preset = config.preset
    badwords_active = preset in _BADWORDS_PRESETS
    if badwords_active and config.badwords_path and not os.path.exists(config.badwords_path):
        missing.append(config.badwords_path)
    if config.decontam.enabled:
        if not config.decontam.benchmarks_path:
            raise ConfigError("decontam.enabled requires decontam.benchmarks_path")
        if not os.path.exists(config.decontam.benchmarks_path):
            missing.append(config.decontam.benchmarks_path)
    if config.gate.enabled:
        for p in (config.gate.scorer_dclm_path, config.gate.scorer_betr_path):
            if not p:
                raise ConfigError("gate.enabled requires scorer_dclm_path and scorer_betr_path")
            if not os.path.exists(p):
                missing.append(p)
    if missing:
        raise ConfigError("missing resource files: " + ", ".join(sorted(set(missing))))

    tlds = tuple(sorted(load_terms(config.tld_list_path))) if config.tld_list_path else DEFAULT_TLDS
    url_matcher = urlfilters.UrlTokenMatcher(tlds=tlds)

    refset = None
    if config.decontam.enabled:
        with open(config.decontam.benchmarks_path, "r", encoding="utf-8") as fh:
            refset = decontam_mod.build_reference_from_jsonl(fh, config.decontam.ngram_size)

    line_config = None
    wrr_gate = None
    if preset in _LINE_PRESETS:
        line_config = _override(
            lineclean.LineHeuristicConfig(), config.line_heuristics, "line_heuristics"
        )
        classes = lineclean.ALL_CLASSES if preset == PRESET_FLUX else lineclean.CORE_CLASSES
        line_config = line_config.with_classes(classes)
        wrr_gate = lineclean.WordRemovalGate(max_ratio=config.word_removal_max_ratio)

    return StagePlan(
        preset=preset,
        blocklist=(
            urlfilters.DomainBlocklist.from_file(config.blocklist_path)
            if config.blocklist_path else urlfilters.DomainBlocklist()
        ),
        strict_lexicon=(
            urlfilters.SubstringLexicon.from_file("strict", config.strict_terms_path)
            if config.strict_terms_path else urlfilters.SubstringLexicon.strict(())
        ),
        hard_lexicon=(
            urlfilters.SubstringLexicon.from_file("hard", config.hard_terms_path)
            if config.hard_terms_path else urlfilters.SubstringLexicon.hard(())
        ),
        soft_lexicon=(
            urlfilters.SubstringLexicon.from_file("soft", config.soft_terms_path)
            if config.soft_terms_path else urlfilters.SubstringLexicon.soft(())
        ),
        url_matcher=url_matcher,
        lid_config=langid.LidConfig(strategy=config.lid_strategy, threshold=config.lid_threshold),
        lid_scorer=lid_scorer or langid.HeuristicEnglishScorer(),
        gq_thresholds=_override(docquality.GopherQualityThresholds(), config.gopher_quality, "gopher_quality"),
        nemo_thresholds=_override(docquality.NemoThresholds(), config.nemo, "nemo"),
        rep_thresholds=_override(docquality.RepetitionThresholds(), config.gopher_repetition, "gopher_repetition"),
        cq_thresholds=_override(docquality.CustomQualityThresholds(), config.custom_quality, "custom_quality"),
        custom_stop_words=(
            load_terms(config.custom_stop_words_path)
            if config.custom_stop_words_path else ENGLISH_STOP_WORDS
        ),
        badwords=(
            (docquality.BadwordsFilter.from_file(config.badwords_path)
             if config.badwords_path else docquality.BadwordsFilter(()))
            if badwords_active else None
        ),
        line_config=line_config,
        wrr_gate=wrr_gate,
        refset=refset,
        decontam_min_matches=config.decontam.min_matches,
        disabled=frozenset(config.disabled_stages),
    )


def new_run_stats(plan: StagePlan, with_dedup: bool, with_gate: bool) -> RunStats:
    stats = RunStats()
    for stage, kind in plan.stage_schema(with_dedup, with_gate):
        stats.stages.append(StageStats(stage=stage, kind=kind))
    return stats


PARTITION_KEPT = "kept"
PARTITION_REJECTED = "rejected"
PARTITION_MULTILINGUAL = "multilingual"


def process_document(plan: StagePlan, doc: Document, stats: RunStats) -> tuple[str, Document | None, Verdict | None, float | None]:
    """Run one document through decontamination and filter stages 1-13.

    Updates ``stats`` in place and returns (partition, doc, verdict,
    lid_score). Dedup and the classifier gate run later, on the surviving
    stream.
    """
    stats.docs_in += 1
    initial_words = doc.word_count()
    stats.initial_tokens += initial_words

    def rejected(stage_name: str, verdict: Verdict, words: int):
        stats.stage(stage_name).record_rejection(verdict.criterion, words)
        return PARTITION_REJECTED, doc, verdict, None

    if plan.refset is not None:
        row = stats.stage(decontam_mod.STAGE_DECONTAM)
        row.docs_in += 1
        outcome = decontam_mod.screen(doc, plan.refset, plan.decontam_min_matches)
        if outcome.contaminated:
            verdict = Verdict.reject(decontam_mod.STAGE_DECONTAM, CRITERION_CONTAMINATED)
            return rejected(decontam_mod.STAGE_DECONTAM, verdict, initial_words)

    url_gates = (
        (urlfilters.STAGE_BLOCKLIST, lambda: urlfilters.check_blocklist(doc.url, plan.blocklist)),
        (urlfilters.STAGE_STRICT, lambda: urlfilters.check_strict_substrings(doc.url, plan.strict_lexicon)),
        (urlfilters.STAGE_HARD, lambda: urlfilters.check_hard_substrings(doc.url, plan.hard_lexicon)),
        (urlfilters.STAGE_SOFT, lambda: urlfilters.check_soft_substrings(doc.url, plan.soft_lexicon)),
    )
    for stage_name, check in url_gates:
        if not plan.stage_active(stage_name):
            continue
        stats.stage(stage_name).docs_in += 1
        verdict = check()
        if verdict.is_reject:
            return rejected(stage_name, verdict, doc.word_count())

    stats.stage(urlfilters.STAGE_URL_STRIP).docs_in += 1
    doc, url_removed, _ = urlfilters.apply_modifiers(doc, plan.url_matcher)
    stats.stage(urlfilters.STAGE_URL_STRIP).record_modification("", url_removed)
    stats.stage(urlfilters.STAGE_NEWLINE).docs_in += 1
    # Word deltas from newline collapsing are zero under whitespace counting.
    stats.stage(urlfilters.STAGE_NEWLINE).record_modification("", 0)

    lid_row = stats.stage(langid.STAGE_LANGID)
    lid_row.docs_in += 1
    decision = langid.route(doc, plan.lid_config, plan.lid_scorer)
    if decision.partition == langid.MULTILINGUAL:
        words = doc.word_count()
        lid_row.record_rejection(CRITERION_ROUTED, words)
        stats.multilingual_docs += 1
        stats.multilingual_tokens += words
        return PARTITION_MULTILINGUAL, doc, None, decision.score

    if plan.doc_gates_active:
        doc_gates = (
            (docquality.STAGE_GOPHER_QUALITY,
             lambda: docquality.gopher_quality(doc, plan.gq_thresholds)),
            (docquality.STAGE_NEMO,
             lambda: docquality.nemo(doc, plan.nemo_thresholds, plan.url_matcher)),
            (docquality.STAGE_GOPHER_REPETITION,
             lambda: docquality.gopher_repetition(doc, plan.rep_thresholds)),
        )
        for stage_name, check in doc_gates:
            if not plan.stage_active(stage_name):
                continue
            stats.stage(stage_name).docs_in += 1
            verdict = check()
            if verdict.is_reject:
                return rejected(stage_name, verdict, doc.word_count())

    if plan.badwords is not None and plan.stage_active(docquality.STAGE_BADWORDS):
        stats.stage(docquality.STAGE_BADWORDS).docs_in += 1
        verdict = plan.badwords.check(doc)
        if verdict.is_reject:
            return rejected(docquality.STAGE_BADWORDS, verdict, doc.word_count())

    if plan.line_config is not None:
        if plan.stage_active(docquality.STAGE_CUSTOM_QUALITY):
            stats.stage(docquality.STAGE_CUSTOM_QUALITY).docs_in += 1
            verdict = docquality.custom_quality(doc, plan.cq_thresholds, plan.custom_stop_words)
            if verdict.is_reject:
                return rejected(docquality.STAGE_CUSTOM_QUALITY, verdict, doc.word_count())

        clean_row = stats.stage(lineclean.STAGE_LINE_CLEAN)
        clean_row.docs_in += 1
        w_pre = doc.word_count()
        result = lineclean.clean_lines(doc, plan.line_config)
        for cls, words in result.class_words.items():
            clean_row.record_modification(cls, words)
        if result.doc is None:
            # Zero lines survive: excised tokens are already attributed per
            # class above, so the rejection itself carries none.
            clean_row.record_rejection(result.verdict.criterion, 0)
            return PARTITION_REJECTED, doc, result.verdict, None
        doc = result.doc
        w_post = doc.word_count()

        if plan.stage_active(lineclean.STAGE_WORD_REMOVAL):
            wrr_row = stats.stage(lineclean.STAGE_WORD_REMOVAL)
            wrr_row.docs_in += 1
            verdict = lineclean.word_removal_gate(w_pre, w_post, plan.wrr_gate)
            if verdict.is_reject:
                return rejected(lineclean.STAGE_WORD_REMOVAL, verdict, w_post)

    return PARTITION_KEPT, doc, None, None


# Worker-side state for the multiprocessing pool (fork-safe initializer).
_WORKER_PLAN: StagePlan | None = None
_WORKER_SCHEMA: tuple[bool, bool] = (False, False)


def _init_worker(plan: StagePlan, with_dedup: bool, with_gate: bool) -> None:
    global _WORKER_PLAN, _WORKER_SCHEMA
    _WORKER_PLAN = plan
    _WORKER_SCHEMA = (with_dedup, with_gate)


def _process_batch(job: tuple[int, list[str]]) -> tuple[list, RunStats]:
    """Parse and filter one batch of raw JSONL lines; runs in a worker."""
    import io as _io

    from webcurate.corpus import read_jsonl

    start_ordinal, batch = job
    plan = _WORKER_PLAN
    stats = new_run_stats(plan, *_WORKER_SCHEMA)
    outcomes = []
    stream = _io.StringIO("".join(batch))
    for item in read_jsonl(stream, start_ordinal=start_ordinal):
        if isinstance(item, ParseFailure):
            stats.parse_failures += 1
            continue
        partition, doc, verdict, lid_score = process_document(plan, item, stats)
        if partition == PARTITION_KEPT:
            outcomes.append((PARTITION_KEPT, doc, None))
        elif partition == PARTITION_MULTILINGUAL:
            record = doc.to_record()
            record["lid_score"] = round(lid_score, 6)
            outcomes.append((PARTITION_MULTILINGUAL, None, json.dumps(record, ensure_ascii=False, sort_keys=True)))
        else:
            outcomes.append((PARTITION_REJECTED, None, rejected_to_json(doc, verdict)))
    return outcomes, stats


def _iter_line_batches(paths: Iterable[str], batch_size: int) -> Iterator[tuple[int, list[str]]]:
    import gzip

    ordinal = 0
    batch: list[str] = []
    for path in paths:
        opener = gzip.open if str(path).endswith(".gz") else open
        with opener(path, "rt", encoding="utf-8", errors="replace") as fh:
            for line in fh:
                batch.append(line)
                if len(batch) >= batch_size:
                    yield ordinal, batch
                    ordinal += len(batch)
                    batch = []
    if batch:
        yield ordinal, batch


@dataclass
class RunResult:
    stats: RunStats
    dedup_stats: DedupStats | None = None
    output_dir: str = ""
    elapsed_s: float = 0.0
    bytes_in: int = 0

    @property
    def mb_per_s(self) -> float:
        return (self.bytes_in / 1e6) / self.elapsed_s if self.elapsed_s > 0 else 0.0


def run(config: PipelineConfig, lid_scorer: langid.LanguageScorer | None = None) -> RunResult:
    """Execute the configured pipeline over the input files.

    Writes kept.jsonl, rejected.jsonl, multilingual.jsonl, stats.json and
    stats.txt (plus figures) into the output directory.
    """
    if not config.inputs:
        raise ConfigError("no input files configured")
    for path in config.inputs:
        if not os.path.exists(path):
            raise ConfigError(f"input file not found: {path}")

    plan = build_plan(config, lid_scorer)
    with_dedup = config.dedup.enabled
    with_gate = config.gate.enabled
    stats = new_run_stats(plan, with_dedup, with_gate)

    bloom = None
    shingles = None
    if with_dedup:
        bloom = BloomFilter(
            config.dedup.fp_rate, config.dedup.expected_ngrams, max_bytes=config.dedup.max_bytes
        )
        shingles = config.dedup.shingle_config()

    scorers = None
    thresholds = None
    if with_gate:
        scorers = (
            NgramScorerModel.load(config.gate.scorer_dclm_path),
            NgramScorerModel.load(config.gate.scorer_betr_path),
        )
        thresholds = BinThresholds(config.gate.tau_dclm, config.gate.tau_betr)

    os.makedirs(config.output_dir, exist_ok=True)
    kept_path = os.path.join(config.output_dir, "kept.jsonl")
    rejected_path = os.path.join(config.output_dir, "rejected.jsonl")
    multilingual_path = os.path.join(config.output_dir, "multilingual.jsonl")
    scores_path = os.path.join(config.output_dir, "scores.jsonl")

    started = time.monotonic()
    bytes_in = sum(os.path.getsize(p) for p in config.inputs)
    dedup_stats = DedupStats(m_bits=bloom.m_bits, k=bloom.k) if bloom else None

    def handle_kept(doc: Document, kept_fh: IO, rejected_fh: IO, scores_fh: IO | None) -> None:
        if bloom is not None:
            row = stats.stage(STAGE_DEDUP)
            row.docs_in += 1
            dedup_stats.documents_in += 1
            dedup_stats.bytes_in += len(doc.text.encode("utf-8"))
            dedup_stats.tokens_in += doc.word_count()
            outcome = dedup_document(doc, bloom, shingles)
            dedup_stats.paragraphs_total += outcome.paragraphs_total
            dedup_stats.paragraphs_flagged += outcome.paragraphs_flagged
            if not outcome.kept:
                dedup_stats.documents_dropped += 1
                verdict = Verdict.reject(STAGE_DEDUP, CRITERION_DUP_DOC)
                row.record_rejection(CRITERION_DUP_DOC, outcome.words_removed)
                rejected_fh.write(rejected_to_json(doc, verdict) + "\n")
                return
            if outcome.paragraphs_flagged:
                dedup_stats.documents_pruned += 1
                row.record_modification(CRITERION_DUP_PARAGRAPHS, outcome.words_removed)
            doc = outcome.doc
            dedup_stats.documents_out += 1
            dedup_stats.bytes_out += len(doc.text.encode("utf-8"))
            dedup_stats.tokens_out += doc.word_count()

        if scorers is not None:
            row = stats.stage(STAGE_GATE)
            row.docs_in += 1
            decision = gate(doc, scorers[0], scorers[1], thresholds)
            if scores_fh is not None:
                scores_fh.write(json.dumps({
                    "id": doc.id,
                    "s_dclm": round(decision.s_dclm, 6),
                    "s_betr": round(decision.s_betr, 6),
                    "accepted": decision.accepted,
                    "bins": list(decision.accepting_bins),
                }, sort_keys=True) + "\n")
            if not decision.accepted:
                criterion = CRITERION_GATE_ERROR if decision.error else CRITERION_GATE_REJECT
                verdict = Verdict.reject(STAGE_GATE, criterion)
                row.record_rejection(criterion, doc.word_count())
                rejected_fh.write(rejected_to_json(doc, verdict) + "\n")
                return

        stats.retained_docs += 1
        stats.retained_tokens += doc.word_count()
        kept_fh.write(document_to_json(doc) + "\n")

    with open(kept_path, "w", encoding="utf-8") as kept_fh, \
            open(rejected_path, "w", encoding="utf-8") as rejected_fh, \
            open(multilingual_path, "w", encoding="utf-8") as multilingual_fh:
        scores_fh = None
        if with_gate and config.gate.emit_scores:
            scores_fh = open(scores_path, "w", encoding="utf-8")
        try:
            if config.workers == 1:
                _init_worker(plan, with_dedup, with_gate)

                def results():
                    for job in _iter_line_batches(config.inputs, config.batch_size):
                        yield _process_batch(job)
            else:
                def results():
                    ctx = multiprocessing.get_context("fork")
                    with ctx.Pool(
                        processes=config.workers,
                        initializer=_init_worker,
                        initargs=(plan, with_dedup, with_gate),
                    ) as pool:
                        # Deterministic mode preserves input order end to end;
                        # relaxed mode takes batches as workers finish, so
                        # output order (and which duplicate survives dedup)
                        # may vary between runs.
                        mapper = pool.imap if config.deterministic else pool.imap_unordered
                        yield from mapper(
                            _process_batch,
                            _iter_line_batches(config.inputs, config.batch_size),
                        )

            for outcomes, batch_stats in results():
                stats.absorb(batch_stats)
                for partition, doc, payload in outcomes:
                    if partition == PARTITION_KEPT:
                        handle_kept(doc, kept_fh, rejected_fh, scores_fh)
                    elif partition == PARTITION_MULTILINGUAL:
                        multilingual_fh.write(payload + "\n")
                    else:
                        rejected_fh.write(payload + "\n")
        finally:
            if scores_fh is not None:
                scores_fh.close()

    if dedup_stats is not None and bloom is not None:
        dedup_stats.inserted = bloom.inserted
        dedup_stats.sparsity = bloom.sparsity()

    elapsed = time.monotonic() - started
    result = RunResult(
        stats=stats,
        dedup_stats=dedup_stats,
        output_dir=config.output_dir,
        elapsed_s=elapsed,
        bytes_in=bytes_in,
    )
    _write_reports(config, result)
    log.info(
        "processed %d docs (%.1f MB) in %.2fs: %.1f docs/s, %.2f MB/s, retained %.2f%%",
        stats.docs_in, bytes_in / 1e6, elapsed,
        stats.docs_in / elapsed if elapsed > 0 else 0.0,
        result.mb_per_s, stats.retention_pct,
    )
    return result


def _write_reports(config: PipelineConfig, result: RunResult) -> None:
    out = config.output_dir
    with open(os.path.join(out, "stats.json"), "w", encoding="utf-8") as fh:
        payload = result.stats.to_dict()
        if result.dedup_stats is not None:
            payload["dedup"] = result.dedup_stats.to_dict()
        fh.write(json.dumps(payload, indent=2) + "\n")
    with open(os.path.join(out, "stats.txt"), "w", encoding="utf-8") as fh:
        fh.write(render_stats_table(result.stats))
    if config.figures:
        render_stats_figure(result.stats, os.path.join(out, "stats.png"))
