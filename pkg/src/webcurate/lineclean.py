"""Line-level boilerplate excision (stage 12) and the word-removal gate (stage 13).

Eleven heuristic classes evaluated in table order; the first match
attributes the class. Whole lines are deleted, never edited, and retained
lines keep their original relative order. Blank lines are structural and
are never matched.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field, replace
from functools import lru_cache

from webcurate.corpus import Document, Verdict, count_words

STAGE_LINE_CLEAN = "line_level_quality"
STAGE_WORD_REMOVAL = "word_removal_ratio"

# Class names in evaluation order. The first five form the core set; the
# remaining six are the extended heuristics only the full preset enables.
CLASS_LINE_LENGTH = "LineLength"
CLASS_UPPERCASE = "UppercaseRatio"
CLASS_NUMERIC = "NumericRatio"
CLASS_COUNTER = "CounterLine"
CLASS_SUBSTRING = "SubstringModifier"
CLASS_CODE = "CodeArtifact"
CLASS_NAVIGATION = "Navigation"
CLASS_COOKIE = "CookieBanner"
CLASS_SOCIAL_CTA = "SocialCTA"
CLASS_FORM_LABEL = "FormLabel"
CLASS_TIMESTAMP = "Timestamp"

CORE_CLASSES = (
    CLASS_LINE_LENGTH,
    CLASS_UPPERCASE,
    CLASS_NUMERIC,
    CLASS_COUNTER,
    CLASS_SUBSTRING,
)
EXTENDED_CLASSES = (
    CLASS_CODE,
    CLASS_NAVIGATION,
    CLASS_COOKIE,
    CLASS_SOCIAL_CTA,
    CLASS_FORM_LABEL,
    CLASS_TIMESTAMP,
)
ALL_CLASSES = CORE_CLASSES + EXTENDED_CLASSES

ENGAGEMENT_TOKENS = (
    "likes", "shares", "comments", "retweets", "reposts", "quotes",
    "bookmarks", "upvotes", "downvotes", "downloads", "views", "followers",
)

DEFAULT_MARKER_PHRASES = (
    "items in cart", "read more", "sign-in", "sign in", "sign up", "log in",
    "click here", "learn more", "add to cart", "buy now", "skip to content",
    "continue reading", "leave a comment", "no comments", "related posts",
    "load more", "show more", "view all", "back to top",
    "all rights reserved", "privacy policy", "terms of service",
)

CODE_START_TOKENS = ("function(", "var", "let", "const", "$.", "@media", "=>")

BREADCRUMB_SEPARATORS = (">", "»", "/", "|")

DEFAULT_COOKIE_PHRASES = ("cookie", "gdpr", "consent")

DEFAULT_CTA_PREFIXES = ("follow us", "subscribe now", "share this")

DEFAULT_FORM_LABELS = ("username", "password", "email address", "submit", "register")

_COUNTER_UNIT = r"\d+(?:[KMB])?\s+(?:%s)" % "|".join(ENGAGEMENT_TOKENS)
_COUNTER_RE = re.compile(
    r"^(?:%s)(?:\s*[·•|,;]\s*(?:%s))*$" % (_COUNTER_UNIT, _COUNTER_UNIT),
    re.IGNORECASE,
)

_DATE = r"(?:\d{1,2}/\d{1,2}/\d{2,4}|\d{4}-\d{2}-\d{2})"
_TIME = r"(?:\d{1,2}:\d{2}(?::\d{2})?(?:\s?[AaPp][Mm])?)"
_TIMESTAMP_RE = re.compile(r"^(?:%s(?:[\s,T]+%s)?|%s)$" % (_DATE, _TIME, _TIME))


@dataclass(frozen=True)
class LineHeuristicConfig:
    min_words_per_line: int = 2
    max_uppercase_ratio: float = 0.50
    max_numeric_ratio: float = 0.999999
    marker_phrases: tuple[str, ...] = DEFAULT_MARKER_PHRASES
    marker_max_words: int = 10
    code_start_tokens: tuple[str, ...] = CODE_START_TOKENS
    breadcrumb_separators: tuple[str, ...] = BREADCRUMB_SEPARATORS
    breadcrumb_min_segments: int = 2
    breadcrumb_max_line_words: int = 10
    breadcrumb_max_segment_words: int = 4
    cookie_phrases: tuple[str, ...] = DEFAULT_COOKIE_PHRASES
    cookie_min_phrases: int = 2
    cta_prefixes: tuple[str, ...] = DEFAULT_CTA_PREFIXES
    form_labels: tuple[str, ...] = DEFAULT_FORM_LABELS
    enabled_classes: tuple[str, ...] = ALL_CLASSES

    def with_classes(self, classes: tuple[str, ...]) -> "LineHeuristicConfig":
        return replace(self, enabled_classes=classes)


@dataclass(frozen=True)
class WordRemovalGate:
    max_ratio: float = 0.05

    def __post_init__(self) -> None:
        if not 0.0 < self.max_ratio < 1.0:
            raise ValueError("max_ratio must be in (0, 1)")


@dataclass
class LineCleanResult:
    doc: Document | None
    verdict: Verdict
    removed_lines: list[tuple[str, str]] = field(default_factory=list)  # (class, line)
    class_words: Counter = field(default_factory=Counter)
    words_removed: int = 0


@lru_cache(maxsize=16)
def _phrase_re(phrases: tuple[str, ...]) -> re.Pattern:
    return re.compile("|".join(re.escape(p.lower()) for p in phrases))


@lru_cache(maxsize=16)
def _separator_re(separators: tuple[str, ...]) -> re.Pattern:
    return re.compile("|".join(re.escape(s) for s in separators))


@lru_cache(maxsize=16)
def _cta_prefixes_lower(prefixes: tuple[str, ...]) -> tuple[str, ...]:
    return tuple(p.lower() for p in prefixes)


def classify_line(line: str, config: LineHeuristicConfig) -> str | None:
    """First matching heuristic class for a line, or None to retain it.

    Classes are evaluated in table order; blank lines are structural and
    always retained.
    """
    stripped = line.strip()
    if not stripped:
        return None
    enabled = config.enabled_classes
    n_words = len(stripped.split())

    if CLASS_LINE_LENGTH in enabled and n_words < config.min_words_per_line:
        return CLASS_LINE_LENGTH

    if CLASS_UPPERCASE in enabled and not line.islower():
        # Over cased characters only; no cased characters exempts the line.
        upper = sum(map(str.isupper, line))
        if upper:
            cased = upper + sum(map(str.islower, line))
            if upper / cased > config.max_uppercase_ratio:
                return CLASS_UPPERCASE

    has_digit = any(map(str.isdigit, stripped))
    if CLASS_NUMERIC in enabled and has_digit:
        if sum(map(str.isdigit, stripped)) / len(stripped) > config.max_numeric_ratio:
            return CLASS_NUMERIC

    if CLASS_COUNTER in enabled and has_digit and _COUNTER_RE.match(stripped):
        return CLASS_COUNTER

    if CLASS_SUBSTRING in enabled and n_words <= config.marker_max_words:
        if _phrase_re(config.marker_phrases).search(line.lower()):
            return CLASS_SUBSTRING

    if CLASS_CODE in enabled:
        lstripped = line.lstrip()
        for token in config.code_start_tokens:
            if not lstripped.startswith(token):
                continue
            if token[-1].isalnum():
                # Word-like prefixes (var, let, const) need a boundary after.
                rest = lstripped[len(token):]
                if rest and (rest[0].isalnum() or rest[0] == "_"):
                    continue
            return CLASS_CODE

    if CLASS_NAVIGATION in enabled and n_words <= config.breadcrumb_max_line_words:
        if any(sep in stripped for sep in config.breadcrumb_separators):
            segments = [s.strip() for s in _separator_re(config.breadcrumb_separators).split(stripped)]
            segments = [s for s in segments if s]
            # Segments must be short and carry at least one letter, so that
            # slash-bearing dates and arithmetic don't register as breadcrumbs.
            if len(segments) >= config.breadcrumb_min_segments and all(
                len(s.split()) <= config.breadcrumb_max_segment_words
                and any(c.isalpha() for c in s)
                for s in segments
            ):
                return CLASS_NAVIGATION

    if CLASS_COOKIE in enabled:
        lowered = line.lower()
        hits = sum(1 for phrase in config.cookie_phrases if phrase in lowered)
        if hits >= config.cookie_min_phrases:
            return CLASS_COOKIE

    if CLASS_SOCIAL_CTA in enabled and stripped.lower().startswith(_cta_prefixes_lower(config.cta_prefixes)):
        return CLASS_SOCIAL_CTA

    if CLASS_FORM_LABEL in enabled:
        if stripped.rstrip(":*").strip().lower() in config.form_labels:
            return CLASS_FORM_LABEL

    if CLASS_TIMESTAMP in enabled and has_digit and _TIMESTAMP_RE.match(stripped):
        return CLASS_TIMESTAMP

    return None


def clean_lines(doc: Document, config: LineHeuristicConfig = LineHeuristicConfig()) -> LineCleanResult:
    """Excise boilerplate lines; reject documents reduced to zero lines."""
    kept: list[str] = []
    removed: list[tuple[str, str]] = []
    class_words: Counter = Counter()
    non_blank_kept = 0
    for line in doc.text.split("\n"):
        cls = classify_line(line, config)
        if cls is None:
            kept.append(line)
            if line.strip():
                non_blank_kept += 1
        else:
            removed.append((cls, line))
            class_words[cls] += count_words(line)
    words_removed = sum(class_words.values())
    if non_blank_kept == 0:
        return LineCleanResult(
            doc=None,
            verdict=Verdict.reject(STAGE_LINE_CLEAN, "EmptyAfterClean", words_removed=doc.word_count()),
            removed_lines=removed,
            class_words=class_words,
            words_removed=words_removed,
        )
    if not removed:
        return LineCleanResult(doc=doc, verdict=Verdict.keep())
    new_doc = doc.with_text("\n".join(kept))
    return LineCleanResult(
        doc=new_doc,
        verdict=Verdict.modified(STAGE_LINE_CLEAN, words_removed=words_removed),
        removed_lines=removed,
        class_words=class_words,
        words_removed=words_removed,
    )


def word_removal_gate(w_pre: int, w_post: int, gate: WordRemovalGate = WordRemovalGate()) -> Verdict:
    """Reject iff the cleaning removal ratio strictly exceeds the maximum.

    A document that cannot certify integrity (no words before cleaning) is
    rejected.
    """
    if w_pre <= 0:
        return Verdict.reject(STAGE_WORD_REMOVAL, "WordRemovalRatio")
    ratio = (w_pre - w_post) / w_pre
    if ratio > gate.max_ratio:
        return Verdict.reject(STAGE_WORD_REMOVAL, "WordRemovalRatio", words_removed=w_post)
    return Verdict.keep()
