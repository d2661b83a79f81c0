"""Corpus curation toolkit for pre-parsed web documents.

Takes newline-delimited JSON documents through URL pre-filtering, language
routing, document-level quality gates, line-level cleaning, Bloom-filter
fuzzy deduplication, a dual-bin classifier gate and benchmark
decontamination, with per-stage accounting throughout.
"""

from webcurate.corpus import Document, ParseFailure, Verdict, VerdictKind, count_words
from webcurate.errors import ConfigError, PipelineError

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Document",
    "ParseFailure",
    "PipelineError",
    "Verdict",
    "VerdictKind",
    "count_words",
    "__version__",
]
