"""Per-stage accounting: associative counters, table rendering and figures.

Token accounting telescopes: initial tokens equal retained tokens plus the
sum of all removals, with modifier rows counting token deltas rather than
documents.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from webcurate.errors import PipelineError

KIND_FILTER = "filter"
KIND_MODIFIER = "modifier"


@dataclass
class CriterionStats:
    docs: int = 0
    tokens: int = 0


@dataclass
class StageStats:
    stage: str
    kind: str = KIND_FILTER
    docs_in: int = 0
    docs_removed: int = 0
    tokens_removed: int = 0
    criteria: dict = field(default_factory=dict)  # criterion -> CriterionStats

    def record_rejection(self, criterion: str, tokens: int) -> None:
        self.docs_removed += 1
        self.tokens_removed += tokens
        entry = self.criteria.setdefault(criterion, CriterionStats())
        entry.docs += 1
        entry.tokens += tokens

    def record_modification(self, criterion: str, tokens: int) -> None:
        self.tokens_removed += tokens
        if criterion:
            entry = self.criteria.setdefault(criterion, CriterionStats())
            entry.tokens += tokens

    def absorb(self, other: "StageStats") -> None:
        if other.stage != self.stage or other.kind != self.kind:
            raise PipelineError(
                f"cannot merge stats for {self.stage!r}/{self.kind!r} with {other.stage!r}/{other.kind!r}"
            )
        self.docs_in += other.docs_in
        self.docs_removed += other.docs_removed
        self.tokens_removed += other.tokens_removed
        for name, c in other.criteria.items():
            entry = self.criteria.setdefault(name, CriterionStats())
            entry.docs += c.docs
            entry.tokens += c.tokens

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "kind": self.kind,
            "docs_in": self.docs_in,
            "docs_removed": self.docs_removed,
            "tokens_removed": self.tokens_removed,
            "criteria": {
                name: {"docs": c.docs, "tokens": c.tokens}
                for name, c in sorted(self.criteria.items())
            },
        }


def merge_stats(a: StageStats, b: StageStats) -> StageStats:
    """Field-wise sum; associative and commutative. Identity: zeroed stats."""
    if a.stage != b.stage or a.kind != b.kind:
        raise PipelineError(f"cannot merge stats for {a.stage!r}/{a.kind!r} with {b.stage!r}/{b.kind!r}")
    merged = StageStats(stage=a.stage, kind=a.kind)
    merged.absorb(a)
    merged.absorb(b)
    return merged


@dataclass
class RunStats:
    stages: list = field(default_factory=list)  # ordered StageStats
    parse_failures: int = 0
    docs_in: int = 0
    initial_tokens: int = 0
    retained_docs: int = 0
    retained_tokens: int = 0
    multilingual_docs: int = 0
    multilingual_tokens: int = 0

    def stage(self, name: str) -> StageStats | None:
        index = self.__dict__.get("_index")
        if index is None or len(index) != len(self.stages):
            index = {s.stage: s for s in self.stages}
            self.__dict__["_index"] = index
        return index.get(name)

    @property
    def retention_pct(self) -> float:
        if self.initial_tokens == 0:
            return 100.0
        return 100.0 * self.retained_tokens / self.initial_tokens

    def to_dict(self) -> dict:
        return {
            "docs_in": self.docs_in,
            "parse_failures": self.parse_failures,
            "initial_tokens": self.initial_tokens,
            "retained_docs": self.retained_docs,
            "retained_tokens": self.retained_tokens,
            "retention_pct": round(self.retention_pct, 4),
            "multilingual_docs": self.multilingual_docs,
            "multilingual_tokens": self.multilingual_tokens,
            "stages": [s.to_dict() for s in self.stages],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def absorb(self, other: "RunStats") -> None:
        """Fold a partial run with an identical stage schema into this one."""
        if [(s.stage, s.kind) for s in self.stages] != [(s.stage, s.kind) for s in other.stages]:
            raise PipelineError("stage schema mismatch between partial run stats")
        for mine, theirs in zip(self.stages, other.stages):
            mine.absorb(theirs)
        self.parse_failures += other.parse_failures
        self.docs_in += other.docs_in
        self.initial_tokens += other.initial_tokens
        self.retained_docs += other.retained_docs
        self.retained_tokens += other.retained_tokens
        self.multilingual_docs += other.multilingual_docs
        self.multilingual_tokens += other.multilingual_tokens


def merge_run_stats(a: RunStats, b: RunStats) -> RunStats:
    """Merge two partial runs with identical stage schemas."""
    merged = RunStats(stages=[StageStats(stage=s.stage, kind=s.kind) for s in a.stages])
    merged.absorb(a)
    merged.absorb(b)
    return merged


# Stages rendered as a bold group row with indented per-criterion sub-rows.
_GROUP_STAGES = {
    "gopher_quality": "Gopher Quality Filter",
    "nemo": "Nemo Filter",
    "gopher_repetition": "Gopher Repetition",
    "custom_quality": "Custom Quality Filter",
    "line_level_quality": "Line Level Quality",
}

_STAGE_LABELS = {
    "decontamination": "Decontamination",
    "ut1_blocklist": "UT1 Domain Blocklist",
    "url_strict_substring": "URL Strict Substring",
    "url_hard_substring": "URL Hard Substring",
    "url_soft_substring": "URL Soft Substring",
    "url_token_removal": "URL Token Removal",
    "newline_normalization": "Newline Normalization",
    "language_identification": "Language Identification",
    "badwords": "Badwords Filter",
    "word_removal_ratio": "Word Removal Ratio",
    "dedup": "Bloom Filter Dedup",
    "quality_gate": "Dual-Bin Quality Gate",
}


def _pct(tokens: int, total: int) -> str:
    if total == 0:
        return "0.00%"
    pct = 100.0 * tokens / total
    if 0 < pct < 0.005:
        return "<0.01%"
    return f"{pct:.2f}%"


def render_stats_table(stats: RunStats) -> str:
    """Aligned text table: stage rows, group rows with indented sub-filter
    rows, a % of initial tokens column, and the final retained row."""
    total = stats.initial_tokens
    rows: list[tuple[str, str, str, str, str]] = []
    rows.append(("Initial Input", "---", "---", f"{total:,}", "100.00%"))
    for s in stats.stages:
        label = _STAGE_LABELS.get(s.stage, s.stage)
        kind = "Modifier" if s.kind == KIND_MODIFIER else "Filter"
        docs = "---" if s.kind == KIND_MODIFIER else f"{s.docs_removed:,}"
        if s.stage in _GROUP_STAGES:
            rows.append((
                _GROUP_STAGES[s.stage], "Group" if kind == "Filter" else kind,
                docs, f"{s.tokens_removed:,}", _pct(s.tokens_removed, total),
            ))
            for name, c in sorted(s.criteria.items(), key=lambda kv: (-kv[1].tokens, kv[0])):
                sub_docs = "---" if s.kind == KIND_MODIFIER else f"{c.docs:,}"
                rows.append((
                    "  " + name, "Sub-filter", sub_docs, f"{c.tokens:,}", _pct(c.tokens, total),
                ))
        else:
            rows.append((label, kind, docs, f"{s.tokens_removed:,}", _pct(s.tokens_removed, total)))
    rows.append((
        "Final Retained Corpus",
        "Output",
        f"{stats.retained_docs:,}",
        f"{stats.retained_tokens:,}",
        _pct(stats.retained_tokens, total),
    ))

    headers = ("Filter Stage", "Type", "Docs Removed", "Tokens Removed", "% Total")
    widths = [max(len(headers[i]), *(len(r[i]) for r in rows)) for i in range(5)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * w for w in widths),
    ]
    for r in rows:
        lines.append("  ".join(r[i].ljust(widths[i]) for i in range(5)))
    return "\n".join(lines) + "\n"


def render_stats_figure(stats: RunStats, path: str) -> None:
    """Horizontal bar chart of token share per stage next to the text table."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    total = stats.initial_tokens or 1
    labels = []
    values = []
    for s in stats.stages:
        labels.append(_GROUP_STAGES.get(s.stage) or _STAGE_LABELS.get(s.stage, s.stage))
        values.append(100.0 * s.tokens_removed / total)
    labels.append("Retained")
    values.append(stats.retention_pct)

    fig, ax = plt.subplots(figsize=(9, 0.42 * len(labels) + 1.6))
    colors = ["#b23b3b"] * (len(labels) - 1) + ["#2f7d4f"]
    ax.barh(range(len(labels)), values, color=colors)
    ax.set_yticks(range(len(labels)))
    ax.set_yticklabels(labels, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("% of initial tokens")
    ax.set_title("Token accounting by stage")
    for i, v in enumerate(values):
        ax.text(v, i, f" {v:.2f}%", va="center", fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_sweep_figure(results, path: str) -> None:
    """Retention per threshold pair for the sweep report."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    labels = [f"({r.tau_dclm:g}, {r.tau_betr:g})" for r in results]
    values = [r.retention_pct for r in results]
    fig, ax = plt.subplots(figsize=(max(6, 1.1 * len(labels)), 4))
    ax.bar(range(len(labels)), values, color="#3b6db2")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("Token retention %")
    ax.set_title("Dual-bin gate retention by threshold pair")
    for i, v in enumerate(values):
        ax.text(i, v, f"{v:.2f}%", ha="center", va="bottom", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_contamination_figure(rep, path: str) -> None:
    """Per-benchmark contaminated document/instance counts."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    names = list(rep.rows)
    docs = [rep.rows[n][0] for n in names]
    insts = [rep.rows[n][1] for n in names]
    x = np.arange(len(names))
    fig, ax = plt.subplots(figsize=(max(6, 0.9 * len(names)), 4))
    ax.bar(x - 0.2, docs, width=0.4, label="Unique documents", color="#b23b3b")
    ax.bar(x + 0.2, insts, width=0.4, label="Instances", color="#3b6db2")
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_title("Benchmark contamination")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
