"""Document-level quality gates (stages 8-11) plus the optional badwords filter.

Each gate evaluates its criteria in table order with early exit, so exactly
one criterion is attributed per rejection. All gates are pure per-document.
"""

from __future__ import annotations

import re
import string
from collections import Counter
from dataclasses import dataclass

from webcurate.corpus import Document, Verdict
from webcurate.urlfilters import UrlTokenMatcher
from webcurate.wordlists import ENGLISH_STOP_WORDS, GOPHER_STOP_WORDS

STAGE_GOPHER_QUALITY = "gopher_quality"
STAGE_NEMO = "nemo"
STAGE_GOPHER_REPETITION = "gopher_repetition"
STAGE_CUSTOM_QUALITY = "custom_quality"
STAGE_BADWORDS = "badwords"

BULLET_CHARS = ("•", "-", "*", "‣", "▪")
ELLIPSIS_SUFFIXES = ("...", "…")
PAREN_CHARS = frozenset("()")
BRACKET_PAIRS = {"(": ")", "[": "]", "{": "}"}
_OPENERS = frozenset(BRACKET_PAIRS)
_CLOSERS = frozenset(BRACKET_PAIRS.values())

_PUNCT_STRIP = string.punctuation + "‘’“”"

# Per-character and per-word classification caches. Web text draws from a
# small alphabet and a repetitive vocabulary, so classifying each distinct
# value once makes the character-ratio gates a single C-speed Counter pass.
_CHAR_CLASS: dict[str, int] = {}
_CLS_ALNUM, _CLS_SPACE, _CLS_DIGIT, _CLS_PAREN = 1, 2, 4, 8
_WORD_HAS_ALPHA: dict[str, bool] = {}
_WORD_NORM: dict[str, str] = {}
_CACHE_CAP = 1 << 20


def _char_class(c: str) -> int:
    cls = _CHAR_CLASS.get(c)
    if cls is None:
        cls = (
            (_CLS_ALNUM if c.isalnum() else 0)
            | (_CLS_SPACE if c.isspace() else 0)
            | (_CLS_DIGIT if c.isdigit() else 0)
            | (_CLS_PAREN if c in PAREN_CHARS else 0)
        )
        if len(_CHAR_CLASS) > _CACHE_CAP:
            _CHAR_CLASS.clear()
        _CHAR_CLASS[c] = cls
    return cls


def char_class_counts(text: str) -> tuple[int, int, int, int]:
    """(non-alnum-non-space, digits, whitespace, parens) in one pass."""
    non_alnum = digits = spaces = parens = 0
    for c, n in Counter(text).items():
        cls = _char_class(c)
        if not cls & (_CLS_ALNUM | _CLS_SPACE):
            non_alnum += n
        if cls & _CLS_DIGIT:
            digits += n
        if cls & _CLS_SPACE:
            spaces += n
        if cls & _CLS_PAREN:
            parens += n
    return non_alnum, digits, spaces, parens


def _word_has_alpha(word: str) -> bool:
    value = _WORD_HAS_ALPHA.get(word)
    if value is None:
        value = any(c.isalpha() for c in word)
        if len(_WORD_HAS_ALPHA) > _CACHE_CAP:
            _WORD_HAS_ALPHA.clear()
        _WORD_HAS_ALPHA[word] = value
    return value


def _norm_word(word: str) -> str:
    value = _WORD_NORM.get(word)
    if value is None:
        value = word.lower().strip(_PUNCT_STRIP)
        if len(_WORD_NORM) > _CACHE_CAP:
            _WORD_NORM.clear()
        _WORD_NORM[word] = value
    return value


@dataclass(frozen=True)
class GopherQualityThresholds:
    min_words: int = 50
    max_words: int = 100_000
    min_mean_word_len: float = 3.0
    max_mean_word_len: float = 10.0
    max_symbol_word_ratio: float = 0.10
    max_bullet_line_ratio: float = 0.90
    max_ellipsis_line_ratio: float = 0.30
    min_alpha_word_ratio: float = 0.80
    min_stop_words: int = 2


@dataclass(frozen=True)
class NemoThresholds:
    max_non_alnum_ratio: float = 0.25
    max_numeric_ratio: float = 0.15
    max_url_char_ratio: float = 0.20
    max_whitespace_ratio: float = 0.25
    max_paren_ratio: float = 0.10


@dataclass(frozen=True)
class RepetitionThresholds:
    dup_line_frac: float = 0.30
    dup_line_char_frac: float = 0.20
    dup_para_frac: float = 0.30
    dup_para_char_frac: float = 0.20
    # index by n: thresholds strictly decreasing within each family
    top_ngram_char_frac: tuple[tuple[int, float], ...] = ((2, 0.20), (3, 0.18), (4, 0.16))
    dup_ngram_char_frac: tuple[tuple[int, float], ...] = (
        (5, 0.15), (6, 0.14), (7, 0.13), (8, 0.12), (9, 0.11), (10, 0.10),
    )


@dataclass(frozen=True)
class CustomQualityThresholds:
    min_tokens: int = 50
    min_stop_word_ratio: float = 0.20
    max_unclosed_bracket_ratio: float = 0.05


def stop_word_count(words: list[str], stop_words: frozenset[str]) -> int:
    """Occurrences of stop words, compared case-insensitively with
    leading/trailing punctuation stripped."""
    cache = _WORD_NORM
    total = 0
    for w, n in Counter(words).items():
        norm = cache.get(w)
        if norm is None:
            norm = _norm_word(w)
        if norm in stop_words:
            total += n
    return total


def _non_empty_lines(text: str) -> list[str]:
    return [line for line in text.split("\n") if line.strip()]


def gopher_quality(
    doc: Document,
    thresholds: GopherQualityThresholds = GopherQualityThresholds(),
    stop_words: frozenset[str] = GOPHER_STOP_WORDS,
) -> Verdict:
    """Seven statistical criteria, early exit on the first failure."""
    t = thresholds
    text = doc.text
    words = text.split()
    n_words = len(words)

    if n_words < t.min_words:
        return Verdict.reject(STAGE_GOPHER_QUALITY, "TooFewWords")
    if n_words > t.max_words:
        return Verdict.reject(STAGE_GOPHER_QUALITY, "TooManyWords")

    mean_len = sum(map(len, words)) / n_words
    if mean_len < t.min_mean_word_len or mean_len > t.max_mean_word_len:
        return Verdict.reject(STAGE_GOPHER_QUALITY, "AvgWordLen")

    symbols = text.count("#") + text.count("...") + text.count("…")
    if symbols / n_words > t.max_symbol_word_ratio:
        return Verdict.reject(STAGE_GOPHER_QUALITY, "SymbolWordRatio")

    lines = _non_empty_lines(text)
    if lines:
        bullets = sum(1 for ln in lines if ln.lstrip().startswith(BULLET_CHARS))
        if bullets / len(lines) > t.max_bullet_line_ratio:
            return Verdict.reject(STAGE_GOPHER_QUALITY, "BulletLineRatio")
        ellipses = sum(1 for ln in lines if ln.rstrip().endswith(ELLIPSIS_SUFFIXES))
        if ellipses / len(lines) > t.max_ellipsis_line_ratio:
            return Verdict.reject(STAGE_GOPHER_QUALITY, "EllipsisLineRatio")

    word_counts = Counter(words)
    alpha_cache, norm_cache = _WORD_HAS_ALPHA, _WORD_NORM
    alpha_words = 0
    stops = 0
    for w, n in word_counts.items():
        has_alpha = alpha_cache.get(w)
        if has_alpha is None:
            has_alpha = _word_has_alpha(w)
        if has_alpha:
            alpha_words += n
        norm = norm_cache.get(w)
        if norm is None:
            norm = _norm_word(w)
        if norm in stop_words:
            stops += n
    if alpha_words / n_words < t.min_alpha_word_ratio:
        return Verdict.reject(STAGE_GOPHER_QUALITY, "AlphaWordsRatio")
    if stops < t.min_stop_words:
        return Verdict.reject(STAGE_GOPHER_QUALITY, "TooFewStopWords")

    return Verdict.keep()


def nemo(
    doc: Document,
    thresholds: NemoThresholds = NemoThresholds(),
    url_matcher: UrlTokenMatcher | None = None,
) -> Verdict:
    """Five character-ratio constraints over total characters, table order.

    The non-alphanumeric ratio excludes whitespace, which has its own
    criterion further down the table.
    """
    t = thresholds
    text = doc.text
    total = len(text)
    if total == 0:
        return Verdict.reject(STAGE_NEMO, "NonAlphaNumericRatio")

    non_alnum, numeric, whitespace, parens = char_class_counts(text)
    if non_alnum / total > t.max_non_alnum_ratio:
        return Verdict.reject(STAGE_NEMO, "NonAlphaNumericRatio")
    if numeric / total > t.max_numeric_ratio:
        return Verdict.reject(STAGE_NEMO, "NumericRatio")

    matcher = url_matcher or _URL_MATCHER
    if matcher.url_char_count(text) / total > t.max_url_char_ratio:
        return Verdict.reject(STAGE_NEMO, "UrlCharRatio")

    if whitespace / total > t.max_whitespace_ratio:
        return Verdict.reject(STAGE_NEMO, "WhitespaceRatio")
    if parens / total > t.max_paren_ratio:
        return Verdict.reject(STAGE_NEMO, "ParenthesesRatio")

    return Verdict.keep()


_URL_MATCHER = UrlTokenMatcher()


def _dup_segment_fractions(segments: list[str]) -> tuple[float, float]:
    """(count fraction, char fraction) of occurrences beyond the first."""
    if len(segments) < 2:
        return 0.0, 0.0
    counts = Counter(segments)
    dup_count = sum(c - 1 for c in counts.values() if c > 1)
    if dup_count == 0:
        return 0.0, 0.0
    total_chars = sum(len(s) for s in segments)
    dup_chars = sum(len(s) * (c - 1) for s, c in counts.items() if c > 1)
    return dup_count / len(segments), (dup_chars / total_chars if total_chars else 0.0)


def _split_paragraphs(text: str) -> list[str]:
    return [p for p in text.split("\n\n") if p.strip()]


class _NgramIndex:
    """Shared n-gram machinery for one word sequence.

    An n-gram can only repeat if every word in its window occurs at least
    twice in the document, so windows containing any unique word are pruned
    before counting. The pruning is exact; on natural text it eliminates
    nearly all windows.
    """

    def __init__(self, words: list[str]):
        self.words = words
        self.total_chars = sum(map(len, words))
        counts = Counter(words)
        # Maximal runs [a, b) of words that all occur at least twice; only
        # windows inside a run can hold a repeated n-gram.
        runs: list[tuple[int, int]] = []
        start = None
        for i, w in enumerate(words):
            if counts[w] > 1:
                if start is None:
                    start = i
            elif start is not None:
                runs.append((start, i))
                start = None
        if start is not None:
            runs.append((start, len(words)))
        self._runs = runs

    def _candidate_counts(self, n: int) -> tuple[Counter, list[int]]:
        words = self.words
        starts = [i for a, b in self._runs if b - a >= n for i in range(a, b - n + 1)]
        counts = Counter(tuple(words[i : i + n]) for i in starts)
        return counts, starts

    def top_fraction(self, n: int) -> float:
        """Characters covered by the most frequent n-gram, occurrences
        counted greedily without overlap, over total word characters.
        Zero when no n-gram repeats."""
        if len(self.words) < n or self.total_chars == 0:
            return 0.0
        counts, starts = self._candidate_counts(n)
        if not counts:
            return 0.0
        top_count = max(counts.values())
        if top_count < 2:
            return 0.0
        # Tie-break: longest by characters, then lexicographic, for determinism.
        top = max(
            (g for g, c in counts.items() if c == top_count),
            key=lambda g: (sum(map(len, g)), g),
        )
        top_chars = sum(map(len, top))
        covered = 0
        last_end = -1
        words = self.words
        for i in starts:
            if i > last_end and tuple(words[i : i + n]) == top:
                covered += top_chars
                last_end = i + n - 1
        return covered / self.total_chars

    def dup_fraction(self, n: int) -> float:
        """Characters covered by any n-gram occurring at least twice, each
        position counted at most once, over total word characters."""
        if len(self.words) < n or self.total_chars == 0:
            return 0.0
        counts, starts = self._candidate_counts(n)
        covered: set[int] = set()
        words = self.words
        for i in starts:
            if counts[tuple(words[i : i + n])] > 1:
                covered.update(range(i, i + n))
        if not covered:
            return 0.0
        return sum(len(words[i]) for i in covered) / self.total_chars


def top_ngram_char_fraction(words: list[str], n: int) -> float:
    return _NgramIndex(words).top_fraction(n)


def dup_ngram_char_fraction(words: list[str], n: int) -> float:
    return _NgramIndex(words).dup_fraction(n)


def repetition_metrics(text: str, thresholds: RepetitionThresholds) -> list[tuple[str, float, float]]:
    """All thirteen (criterion, value, threshold) rows in table order."""
    t = thresholds
    line_frac, line_char_frac = _dup_segment_fractions(_non_empty_lines(text))
    para_frac, para_char_frac = _dup_segment_fractions(_split_paragraphs(text))
    rows = [
        ("DupLineFrac", line_frac, t.dup_line_frac),
        ("DupLineCharFrac", line_char_frac, t.dup_line_char_frac),
        ("DupParFrac", para_frac, t.dup_para_frac),
        ("DupParCharFrac", para_char_frac, t.dup_para_char_frac),
    ]
    index = _NgramIndex(text.split())
    for n, threshold in t.top_ngram_char_frac:
        rows.append(("TopNGramCharFrac", index.top_fraction(n), threshold))
    for n, threshold in t.dup_ngram_char_frac:
        rows.append(("DupNGramCharFrac", index.dup_fraction(n), threshold))
    return rows


def gopher_repetition(
    doc: Document,
    thresholds: RepetitionThresholds = RepetitionThresholds(),
) -> Verdict:
    """Thirteen repetition metrics; reject on the first above threshold."""
    for criterion, value, threshold in repetition_metrics(doc.text, thresholds):
        if value > threshold:
            return Verdict.reject(STAGE_GOPHER_REPETITION, criterion)
    return Verdict.keep()


_BRACKET_RE = re.compile(r"[()\[\]{}]")


def unclosed_bracket_ratio(text: str) -> float:
    """Unmatched bracket characters over total bracket characters ((), [], {}).

    Documents with no brackets have ratio 0.
    """
    stack: list[str] = []
    unmatched = 0
    total = 0
    for match in _BRACKET_RE.finditer(text):
        c = match.group()
        total += 1
        if c in _OPENERS:
            stack.append(BRACKET_PAIRS[c])
        elif stack and stack[-1] == c:
            stack.pop()
        else:
            unmatched += 1
    unmatched += len(stack)
    return unmatched / total if total else 0.0


def custom_quality(
    doc: Document,
    thresholds: CustomQualityThresholds = CustomQualityThresholds(),
    stop_words: frozenset[str] = ENGLISH_STOP_WORDS,
) -> Verdict:
    """Minimum token count, stop-word ratio and unclosed-bracket ratio."""
    t = thresholds
    words = doc.text.split()
    if len(words) < t.min_tokens:
        return Verdict.reject(STAGE_CUSTOM_QUALITY, "MinTokenCount")
    if stop_word_count(words, stop_words) / len(words) < t.min_stop_word_ratio:
        return Verdict.reject(STAGE_CUSTOM_QUALITY, "StopWordRatio")
    if unclosed_bracket_ratio(doc.text) > t.max_unclosed_bracket_ratio:
        return Verdict.reject(STAGE_CUSTOM_QUALITY, "UnclosedBracketRatio")
    return Verdict.keep()


class BadwordsFilter:
    """Whole-word badword rejection. Only active in the DocFilter and
    LineClean presets; the full pipeline enforces these noise classes at
    line resolution instead."""

    def __init__(self, terms):
        self.terms = frozenset(t.lower() for t in terms if t)
        if self.terms:
            alternation = "|".join(re.escape(t) for t in sorted(self.terms))
            self._pattern = re.compile(r"(?<!\w)(?:%s)(?!\w)" % alternation)
        else:
            self._pattern = None

    @classmethod
    def from_file(cls, path: str) -> "BadwordsFilter":
        from webcurate.wordlists import load_terms

        return cls(load_terms(path))

    def check(self, doc: Document) -> Verdict:
        if self._pattern and self._pattern.search(doc.text.lower()):
            return Verdict.reject(STAGE_BADWORDS, "BadwordPresent")
        return Verdict.keep()


def badwords_document_filter(doc: Document, lexicon: BadwordsFilter) -> Verdict:
    return lexicon.check(doc)
