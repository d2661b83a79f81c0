"""URL-based pre-filtering (stages 2-5) and the two content modifiers (stage 6).

Stage order is blocklist -> strict -> hard -> soft -> modifiers, with early
exit on the first rejection. All URL matching is case-insensitive; lexicons
and the blocklist are lowercased on load.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from urllib.parse import urlsplit

from webcurate.corpus import Document, Verdict, count_words
from webcurate.wordlists import DEFAULT_PUBLIC_SUFFIXES, DEFAULT_TLDS, load_terms

log = logging.getLogger(__name__)

STAGE_BLOCKLIST = "ut1_blocklist"
STAGE_STRICT = "url_strict_substring"
STAGE_HARD = "url_hard_substring"
STAGE_SOFT = "url_soft_substring"
STAGE_URL_STRIP = "url_token_removal"
STAGE_NEWLINE = "newline_normalization"

# Token delimiters for the strict (path-scoped) lexicon; "/" acts as a
# path-segment boundary.
_STRICT_DELIMS = frozenset("-./")

_NEWLINE_RUN_RE = re.compile(r"\n{3,}")


@dataclass(frozen=True)
class DomainBlocklist:
    """Registered domains rejected outright, before any content analysis."""

    domains: frozenset[str] = frozenset()
    suffixes: frozenset[str] = DEFAULT_PUBLIC_SUFFIXES

    @classmethod
    def from_file(cls, path: str, suffixes: frozenset[str] = DEFAULT_PUBLIC_SUFFIXES) -> "DomainBlocklist":
        return cls(domains=load_terms(path), suffixes=suffixes)


@dataclass(frozen=True)
class SubstringLexicon:
    """URL term list with a matching mode and a minimum match count."""

    kind: str  # "strict" | "hard" | "soft"
    terms: frozenset[str] = frozenset()
    min_matches: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("strict", "hard", "soft"):
            raise ValueError(f"unknown lexicon kind: {self.kind!r}")
        if self.min_matches < 1:
            raise ValueError("min_matches must be >= 1")
        if self.kind == "soft" and self.min_matches < 2:
            raise ValueError("soft lexicons require min_matches >= 2")

    @classmethod
    def strict(cls, terms) -> "SubstringLexicon":
        return cls("strict", frozenset(t.lower() for t in terms), 1)

    @classmethod
    def hard(cls, terms) -> "SubstringLexicon":
        return cls("hard", frozenset(t.lower() for t in terms), 1)

    @classmethod
    def soft(cls, terms, min_matches: int = 2) -> "SubstringLexicon":
        return cls("soft", frozenset(t.lower() for t in terms), min_matches)

    @classmethod
    def from_file(cls, kind: str, path: str) -> "SubstringLexicon":
        terms = load_terms(path)
        if kind == "soft":
            return cls.soft(terms)
        return cls(kind, terms, 1)


def _host_of(url: str) -> str | None:
    try:
        host = urlsplit(url).hostname
    except ValueError:
        return None
    if host:
        return host.lower().rstrip(".")
    # Bare "example.com/path" inputs have no scheme; retry with one.
    if url and "://" not in url:
        try:
            host = urlsplit("http://" + url).hostname
        except ValueError:
            return None
        if host:
            return host.lower().rstrip(".")
    return None


def registered_domain(host: str, suffixes: frozenset[str] = DEFAULT_PUBLIC_SUFFIXES) -> str:
    """Effective second-level domain: one label plus the longest public suffix.

    Hosts with an unknown ending fall back to their last two labels.
    """
    labels = host.lower().rstrip(".").split(".")
    if len(labels) <= 1:
        return host.lower()
    best = None
    for i in range(len(labels) - 1, 0, -1):
        candidate = ".".join(labels[i:])
        if candidate in suffixes:
            best = i
    if best is None:
        best = len(labels) - 1  # unknown TLD: treat last label as the suffix
    start = max(best - 1, 0)
    return ".".join(labels[start:])


def check_blocklist(url: str, blocklist: DomainBlocklist) -> Verdict:
    """Reject iff the URL's registered domain is on the blocklist."""
    if not blocklist.domains:
        return Verdict.keep()
    host = _host_of(url)
    if not host:
        if url:
            log.debug("no host extracted from url %r; keeping", url)
        return Verdict.keep()
    if registered_domain(host, blocklist.suffixes) in blocklist.domains:
        return Verdict.reject(STAGE_BLOCKLIST, "BlocklistedDomain")
    return Verdict.keep()


def _token_delimited(haystack: str, term: str) -> bool:
    start = 0
    while True:
        idx = haystack.find(term, start)
        if idx < 0:
            return False
        before_ok = idx == 0 or haystack[idx - 1] in _STRICT_DELIMS
        end = idx + len(term)
        after_ok = end == len(haystack) or haystack[end] in _STRICT_DELIMS
        if before_ok and after_ok:
            return True
        start = idx + 1


def check_strict_substrings(url: str, lexicon: SubstringLexicon) -> Verdict:
    """Reject iff a term occurs as a token-delimited unit in the URL path."""
    if not lexicon.terms:
        return Verdict.keep()
    try:
        path = urlsplit(url).path.lower()
    except ValueError:
        return Verdict.keep()
    if not path:
        return Verdict.keep()
    for term in lexicon.terms:
        if term and _token_delimited(path, term):
            return Verdict.reject(STAGE_STRICT, "StrictSubstring")
    return Verdict.keep()


def check_hard_substrings(url: str, lexicon: SubstringLexicon) -> Verdict:
    """Reject on a single term occurring anywhere in the full URL string."""
    if not lexicon.terms:
        return Verdict.keep()
    lowered = url.lower()
    for term in lexicon.terms:
        if term and term in lowered:
            return Verdict.reject(STAGE_HARD, "HardSubstring")
    return Verdict.keep()


def check_soft_substrings(url: str, lexicon: SubstringLexicon) -> Verdict:
    """Reject when at least ``min_matches`` distinct terms occur in the URL."""
    if not lexicon.terms:
        return Verdict.keep()
    lowered = url.lower()
    matches = 0
    for term in lexicon.terms:
        if term and term in lowered:
            matches += 1
            if matches >= lexicon.min_matches:
                return Verdict.reject(STAGE_SOFT, "SoftSubstring")
    return Verdict.keep()


@dataclass(frozen=True)
class UrlTokenMatcher:
    """TLD-anchored recogniser for URL-like whitespace tokens."""

    tlds: tuple[str, ...] = DEFAULT_TLDS
    _pattern: re.Pattern = field(init=False, repr=False)

    def __post_init__(self) -> None:
        tld_alt = "|".join(re.escape(t) for t in sorted(self.tlds, key=len, reverse=True))
        # Either scheme-prefixed, or hostname-shaped with a known TLD and an
        # optional port/path. Leading/trailing punctuation is tolerated.
        pattern = re.compile(
            r"^[(\[{<\"']*"
            r"(?:"
            r"(?:https?|ftp)://\S+"
            r"|(?:www\.)?(?:[a-z0-9](?:[a-z0-9_-]*[a-z0-9])?\.)+(?:%s)(?::\d+)?(?:[/?#]\S*)?"
            r")"
            r"[)\]}>\"'.,;:!?]*$" % tld_alt,
            re.IGNORECASE,
        )
        object.__setattr__(self, "_pattern", pattern)

    def is_url_token(self, token: str) -> bool:
        # Anything URL-shaped carries a dot or a scheme; cheap pre-filter.
        if "." not in token and "://" not in token:
            return False
        return bool(self._pattern.match(token))

    def url_char_count(self, text: str) -> int:
        """Characters inside URL-like tokens, for the URL char-ratio criterion."""
        return sum(len(tok) for tok in text.split() if self.is_url_token(tok))


def strip_inline_urls(doc: Document, matcher: UrlTokenMatcher | None = None) -> tuple[Document, int]:
    """Remove URL-like tokens from every line. Never rejects.

    Returns the cleaned document and the number of tokens removed. Line
    count is preserved; intra-line whitespace collapses to single spaces on
    lines that lost a token.
    """
    matcher = matcher or _DEFAULT_MATCHER
    removed = 0
    out_lines = []
    for line in doc.text.split("\n"):
        tokens = line.split()
        kept = [t for t in tokens if not matcher.is_url_token(t)]
        if len(kept) != len(tokens):
            removed += len(tokens) - len(kept)
            out_lines.append(" ".join(kept))
        else:
            out_lines.append(line)
    if removed == 0:
        return doc, 0
    return doc.with_text("\n".join(out_lines)), removed


def normalize_newlines(doc: Document) -> Document:
    """Collapse every run of >= 3 newlines to exactly two. Idempotent."""
    text = _NEWLINE_RUN_RE.sub("\n\n", doc.text)
    if text == doc.text:
        return doc
    return doc.with_text(text)


def apply_modifiers(doc: Document, matcher: UrlTokenMatcher | None = None) -> tuple[Document, int, int]:
    """Stage 6: URL token removal then newline normalization.

    Returns (doc, url_words_removed, newline_words_removed). The newline
    delta is zero under whitespace counting but is reported for pluggable
    counters.
    """
    doc, url_removed = strip_inline_urls(doc, matcher)
    before = count_words(doc.text)
    doc = normalize_newlines(doc)
    newline_removed = before - count_words(doc.text)
    return doc, url_removed, newline_removed


_DEFAULT_MATCHER = UrlTokenMatcher()
