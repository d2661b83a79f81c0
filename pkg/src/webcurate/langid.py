"""English routing (stage 7): whole-document and byte-weighted line scoring.

The language model itself is an injected component; this module owns the
thresholding and weighting math. Documents below threshold are routed to a
multilingual partition, never dropped.
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass

from webcurate.corpus import Document
from webcurate.wordlists import ENGLISH_STOP_WORDS

log = logging.getLogger(__name__)

STAGE_LANGID = "language_identification"

ENGLISH = "english"
MULTILINGUAL = "multilingual"

STRATEGY_WHOLE_DOC = "whole_doc"
STRATEGY_WEIGHTED_LINE = "weighted_line"


class LanguageScorer:
    """Base contract for language scorers.

    ``predict`` returns the top (language label, confidence) pair. Scorers
    that expose a full class distribution should override
    ``english_probability``; the default falls back to the top-1 label,
    reporting 0 when that label is not English (an approximation, logged
    once by the router).
    """

    exposes_english_class = False

    def predict(self, text: str) -> tuple[str, float]:
        raise NotImplementedError

    def english_probability(self, text: str) -> float:
        label, confidence = self.predict(text)
        return confidence if label == "en" else 0.0


class CallableScorer(LanguageScorer):
    """Wraps a plain ``text -> (label, confidence)`` function."""

    def __init__(self, fn, exposes_english_class: bool = False):
        self._fn = fn
        self.exposes_english_class = exposes_english_class

    def predict(self, text: str) -> tuple[str, float]:
        return self._fn(text)


class HeuristicEnglishScorer(LanguageScorer):
    """Deterministic stand-in scorer: no model file required.

    Blends the ASCII-letter ratio with the English function-word hit rate.
    Good enough to route obvious English/non-English text in tests and
    smoke runs; swap in a real 176-language model for production use.
    """

    exposes_english_class = True

    _word_re = re.compile(r"[a-z']+")
    _letter_cache: dict = {}

    def predict(self, text: str) -> tuple[str, float]:
        p = self.english_probability(text)
        return ("en", p) if p >= 0.5 else ("und", 1.0 - p)

    @classmethod
    def _letter_kind(cls, c: str) -> int:
        # 0 = not a letter, 1 = non-ASCII letter, 2 = ASCII letter
        kind = cls._letter_cache.get(c)
        if kind is None:
            kind = (2 if c.isascii() else 1) if c.isalpha() else 0
            if len(cls._letter_cache) > (1 << 20):
                cls._letter_cache.clear()
            cls._letter_cache[c] = kind
        return kind

    def english_probability(self, text: str) -> float:
        if not text or not text.strip():
            return 0.0
        letters = ascii_letters = 0
        for c, n in Counter(text).items():
            kind = self._letter_kind(c)
            if kind:
                letters += n
                if kind == 2:
                    ascii_letters += n
        if letters == 0:
            return 0.0
        ascii_ratio = ascii_letters / letters
        words = self._word_re.findall(text.lower())
        if words:
            stop_hits = sum(map(ENGLISH_STOP_WORDS.__contains__, words))
            # ~35-45% of running English text is function words; saturate there.
            stop_score = min(1.0, (stop_hits / len(words)) / 0.35)
        else:
            stop_score = 0.0
        return max(0.0, min(1.0, 0.5 * ascii_ratio + 0.5 * stop_score * ascii_ratio))


@dataclass(frozen=True)
class LidConfig:
    strategy: str = STRATEGY_WHOLE_DOC
    threshold: float = 0.65

    def __post_init__(self) -> None:
        if self.strategy not in (STRATEGY_WHOLE_DOC, STRATEGY_WEIGHTED_LINE):
            raise ValueError(f"unknown LID strategy: {self.strategy!r}")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("LID threshold must be in (0, 1)")


@dataclass(frozen=True)
class RoutingDecision:
    partition: str  # ENGLISH | MULTILINGUAL
    score: float


def score_whole_document(doc: Document, scorer: LanguageScorer) -> float:
    """English confidence of the newline-stripped full text."""
    text = doc.text.replace("\n", " ")
    if not text.strip():
        return 0.0
    try:
        return scorer.english_probability(text)
    except Exception as exc:
        log.warning("language scorer failed on doc %s: %s; scoring 0", doc.id, exc)
        return 0.0


def score_weighted_lines(doc: Document, scorer: LanguageScorer) -> float:
    """Byte-length-weighted mean of per-line English confidences.

    Empty lines carry zero weight; an all-empty document scores 0. Lines
    where the scorer fails (or reports no English class) contribute 0.
    """
    total = 0
    weighted = 0.0
    for line in doc.lines:
        weight = len(line.encode("utf-8"))
        if weight == 0:
            continue
        try:
            p = scorer.english_probability(line)
        except Exception as exc:
            log.warning("language scorer failed on a line of doc %s: %s", doc.id, exc)
            p = 0.0
        total += weight
        weighted += weight * p
    if total == 0:
        return 0.0
    return weighted / total


def route(doc: Document, config: LidConfig, scorer: LanguageScorer) -> RoutingDecision:
    """English iff the strategy score meets the threshold (inclusive)."""
    if config.strategy == STRATEGY_WEIGHTED_LINE:
        score = score_weighted_lines(doc, scorer)
    else:
        score = score_whole_document(doc, scorer)
    partition = ENGLISH if score >= config.threshold else MULTILINGUAL
    return RoutingDecision(partition=partition, score=score)
