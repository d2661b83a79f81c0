"""Benchmark decontamination: n-gram overlap screening at corpus scope.

Documents sharing at least ``min_matches`` normalized word n-grams with any
benchmark instance are deterministically marked for removal. The report
follows the two-column layout: unique contaminated documents and
contaminated evaluation instances per benchmark.
"""

from __future__ import annotations

import json
import logging
import string
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable

from webcurate.corpus import Document

log = logging.getLogger(__name__)

STAGE_DECONTAM = "decontamination"

DEFAULT_NGRAM_SIZE = 8

_PUNCT_TABLE = str.maketrans({c: " " for c in string.punctuation})


def normalize_text(text: str) -> str:
    """Lowercase, punctuation stripped to spaces, whitespace collapsed."""
    return " ".join(text.lower().translate(_PUNCT_TABLE).split())


def word_ngrams(text: str, n: int) -> list[str]:
    """All word n-grams of the normalized text; texts shorter than ``n``
    words yield one whole-text n-gram, empty texts none."""
    words = normalize_text(text).split()
    if not words:
        return []
    if len(words) <= n:
        return [" ".join(words)]
    return [" ".join(words[i : i + n]) for i in range(len(words) - n + 1)]


@dataclass
class ReferenceSet:
    ngram_size: int = DEFAULT_NGRAM_SIZE
    index: dict = field(default_factory=dict)  # ngram -> set[(benchmark, instance_id)]
    benchmarks: set = field(default_factory=set)
    instances: int = 0

    def add_instance(self, benchmark: str, instance_id: str, text: str) -> None:
        self.benchmarks.add(benchmark)
        self.instances += 1
        for gram in word_ngrams(text, self.ngram_size):
            self.index.setdefault(gram, set()).add((benchmark, instance_id))


def build_reference(records: Iterable[dict], ngram_size: int = DEFAULT_NGRAM_SIZE) -> ReferenceSet:
    """Index benchmark items given as dicts {benchmark, instance_id, text}."""
    refset = ReferenceSet(ngram_size=ngram_size)
    for record in records:
        refset.add_instance(
            str(record["benchmark"]), str(record["instance_id"]), str(record.get("text", ""))
        )
    if not refset.instances:
        log.warning("benchmark reference set is empty; nothing will be flagged")
    return refset


def build_reference_from_jsonl(stream: IO, ngram_size: int = DEFAULT_NGRAM_SIZE) -> ReferenceSet:
    def records():
        for line in stream:
            if line.strip():
                yield json.loads(line)

    return build_reference(records(), ngram_size)


@dataclass
class ScreenResult:
    doc_id: str
    contaminated: bool
    # benchmark -> set of instance ids hit by this document
    matches: dict = field(default_factory=dict)


def screen(doc: Document, refset: ReferenceSet, min_matches: int = 1) -> ScreenResult:
    """Flag the document iff at least ``min_matches`` of its n-grams occur in
    the reference set; every matched instance is recorded."""
    matched: dict[str, set[str]] = defaultdict(set)
    hits = 0
    for gram in set(word_ngrams(doc.text, refset.ngram_size)):
        owners = refset.index.get(gram)
        if owners:
            hits += 1
            for benchmark, instance_id in owners:
                matched[benchmark].add(instance_id)
    contaminated = hits >= min_matches and hits > 0
    return ScreenResult(
        doc_id=doc.id,
        contaminated=contaminated,
        matches={b: set(ids) for b, ids in matched.items()} if contaminated else {},
    )


@dataclass
class ContaminationReport:
    # benchmark -> (unique contaminated documents, contaminated instances)
    rows: dict = field(default_factory=dict)
    total_documents: int = 0  # unique across benchmarks
    total_instances: int = 0

    def to_dict(self) -> dict:
        return {
            "benchmarks": {
                name: {"unique_contaminated_documents": docs, "contaminated_instances": insts}
                for name, (docs, insts) in self.rows.items()
            },
            "total": {
                "unique_contaminated_documents": self.total_documents,
                "contaminated_instances": self.total_instances,
            },
        }


def report(outcomes: Iterable[ScreenResult], benchmarks: Iterable[str] = ()) -> ContaminationReport:
    """Aggregate screen outcomes into per-benchmark and total counts.

    A document contaminating several benchmarks counts once in each
    benchmark row and once in the total, which therefore can be smaller
    than the column sum.
    """
    docs_per_benchmark: dict[str, set[str]] = defaultdict(set)
    instances_per_benchmark: dict[str, set[str]] = defaultdict(set)
    all_docs: set[str] = set()
    for outcome in outcomes:
        if not outcome.contaminated:
            continue
        all_docs.add(outcome.doc_id)
        for benchmark, instance_ids in outcome.matches.items():
            docs_per_benchmark[benchmark].add(outcome.doc_id)
            instances_per_benchmark[benchmark].update(instance_ids)

    names = set(benchmarks) | set(docs_per_benchmark)
    rows = {}
    ordered = sorted(names, key=lambda b: (-len(docs_per_benchmark.get(b, ())), b))
    for name in ordered:
        rows[name] = (
            len(docs_per_benchmark.get(name, ())),
            len(instances_per_benchmark.get(name, ())),
        )
    return ContaminationReport(
        rows=rows,
        total_documents=len(all_docs),
        total_instances=sum(len(v) for v in instances_per_benchmark.values()),
    )


def render_report_table(rep: ContaminationReport) -> str:
    """Aligned text table in the two-column layout."""
    headers = ("Benchmark", "Unique Contaminated Documents", "Contaminated Evaluation Instances")
    rows = [(name, str(docs), str(insts)) for name, (docs, insts) in rep.rows.items()]
    rows.append(("Total", str(rep.total_documents), str(rep.total_instances)))
    widths = [max(len(headers[i]), *(len(r[i]) for r in rows)) for i in range(3)]
    sep = "-+-".join("-" * w for w in widths)
    lines = [" | ".join(h.ljust(widths[i]) for i, h in enumerate(headers)), sep]
    for r in rows[:-1]:
        lines.append(" | ".join(r[i].ljust(widths[i]) for i in range(3)))
    lines.append(sep)
    lines.append(" | ".join(rows[-1][i].ljust(widths[i]) for i in range(3)))
    return "\n".join(lines) + "\n"
