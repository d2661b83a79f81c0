"""Bloom-filter fuzzy deduplication: paragraph shingling with a
document-level fallback over a single shared filter.

Paragraphs are shingled into overlapping word n-grams and probed against
the filter. A paragraph with more than the threshold fraction of shingles
already present is excised; only novel paragraphs that actually survive
have their shingles inserted, so removed content never pollutes the
seen-set. Documents whose flagged-paragraph fraction reaches the fallback
threshold are dropped whole.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from webcurate.corpus import Document, count_words
from webcurate.errors import ConfigError

STAGE_DEDUP = "dedup"

_MASK64 = (1 << 64) - 1

_POPCOUNT = np.unpackbits(np.arange(256, dtype=np.uint8)[:, None], axis=1).sum(axis=1).astype(np.uint32)


def size_filter(fp_rate: float, expected_ngrams: float) -> tuple[int, int]:
    """Bit count and hash count for a target false-positive rate and capacity.

    m = ceil(-n ln p / (ln 2)^2), k = max(1, round(-ln p / ln 2)).
    """
    if not 0.0 < fp_rate < 1.0:
        raise ConfigError(f"fp_rate must be in (0, 1), got {fp_rate}")
    if expected_ngrams < 1:
        raise ConfigError(f"expected_ngrams must be >= 1, got {expected_ngrams}")
    ln2 = math.log(2)
    m = math.ceil(-expected_ngrams * math.log(fp_rate) / (ln2 * ln2))
    k = max(1, round(-math.log(fp_rate) / ln2))
    return m, k


def shingle_hash(shingle: str) -> tuple[int, int]:
    """Stable 128-bit hash of a shingle as a double-hashing (h1, h2) pair."""
    digest = hashlib.blake2b(shingle.encode("utf-8"), digest_size=16).digest()
    h1 = int.from_bytes(digest[:8], "little")
    h2 = int.from_bytes(digest[8:], "little") | 1
    return h1, h2


class BloomFilter:
    """Bit array with k double-hashed probes, sized from (fp_rate, capacity).

    Probe i lands on ((h1 + i*h2) mod 2^64) mod m; scalar and vectorized
    paths agree bit for bit.
    """

    def __init__(self, fp_rate: float, expected_ngrams: float, max_bytes: int | None = None):
        self.fp_rate = fp_rate
        self.expected_ngrams = expected_ngrams
        self.m_bits, self.k = size_filter(fp_rate, expected_ngrams)
        n_bytes = (self.m_bits + 7) // 8
        if max_bytes is not None and n_bytes > max_bytes:
            raise ConfigError(
                f"filter needs {n_bytes} bytes ({self.m_bits} bits) but the "
                f"memory cap is {max_bytes} bytes; lower expected_ngrams or "
                f"raise fp_rate"
            )
        # bytearray for fast scalar bit ops; numpy view shares the buffer
        # for the vectorized batch path.
        self._bits = bytearray(n_bytes)
        self._np = np.frombuffer(self._bits, dtype=np.uint8)
        self._steps = np.arange(self.k, dtype=np.uint64)
        self.inserted = 0

    def _positions(self, h1: int, h2: int) -> list[int]:
        m = self.m_bits
        return [((h1 + i * h2) & _MASK64) % m for i in range(self.k)]

    def add(self, hash_pair: tuple[int, int]) -> None:
        bits = self._bits
        m = self.m_bits
        h1, h2 = hash_pair
        for i in range(self.k):
            pos = ((h1 + i * h2) & _MASK64) % m
            bits[pos >> 3] |= 1 << (pos & 7)
        self.inserted += 1

    def __contains__(self, hash_pair: tuple[int, int]) -> bool:
        bits = self._bits
        m = self.m_bits
        h1, h2 = hash_pair
        for i in range(self.k):
            pos = ((h1 + i * h2) & _MASK64) % m
            if not bits[pos >> 3] & (1 << (pos & 7)):
                return False
        return True

    def add_pairs(self, pairs) -> None:
        """Vectorized insert of an iterable of (h1, h2) pairs."""
        pairs = list(pairs)
        if not pairs:
            return
        if len(pairs) < 8:
            for pair in pairs:
                self.add(pair)
            return
        arr = np.array(pairs, dtype=np.uint64)
        self.add_batch(arr[:, 0], arr[:, 1])

    def _positions_batch(self, h1: np.ndarray, h2: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore"):
            return (h1[:, None] + self._steps[None, :] * h2[:, None]) % np.uint64(self.m_bits)

    def add_batch(self, h1: np.ndarray, h2: np.ndarray) -> None:
        pos = self._positions_batch(h1.astype(np.uint64), h2.astype(np.uint64))
        byte_idx = (pos >> np.uint64(3)).ravel()
        masks = (np.uint8(1) << (pos & np.uint64(7)).astype(np.uint8)).ravel()
        np.bitwise_or.at(self._np, byte_idx, masks)
        self.inserted += len(h1)

    def contains_batch(self, h1: np.ndarray, h2: np.ndarray) -> np.ndarray:
        pos = self._positions_batch(h1.astype(np.uint64), h2.astype(np.uint64))
        byte_idx = pos >> np.uint64(3)
        masks = np.uint8(1) << (pos & np.uint64(7)).astype(np.uint8)
        return ((self._np[byte_idx] & masks) != 0).all(axis=1)

    def set_bit_count(self) -> int:
        return int(_POPCOUNT[self._np].sum())

    def sparsity(self) -> float:
        """Fraction of bits set; ~0.5 at design capacity with optimal k."""
        return self.set_bit_count() / self.m_bits


MODE_OLD_BOTH = "oldboth"


@dataclass(frozen=True)
class ShingleConfig:
    ngram_size: int = 13
    paragraph_separator: str = "\n"
    dup_shingle_threshold: float = 0.80
    doc_fallback_para_threshold: float = 0.80
    mode: str = MODE_OLD_BOTH

    def __post_init__(self) -> None:
        if self.ngram_size < 1:
            raise ConfigError("ngram_size must be >= 1")
        for name in ("dup_shingle_threshold", "doc_fallback_para_threshold"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ConfigError(f"{name} must be in (0, 1]")
        if self.mode != MODE_OLD_BOTH:
            raise ConfigError(f"unsupported dedup mode: {self.mode!r}")


def shingle(paragraph: str, config: ShingleConfig = ShingleConfig()) -> list[str]:
    """Overlapping word n-grams, stride 1, normalized to lowercase with
    collapsed whitespace. Short paragraphs yield one whole-paragraph shingle;
    empty ones yield nothing."""
    words = paragraph.lower().split()
    if not words:
        return []
    n = config.ngram_size
    if len(words) <= n:
        return [" ".join(words)]
    return [" ".join(words[i : i + n]) for i in range(len(words) - n + 1)]


@dataclass
class DedupOutcome:
    kept: bool
    doc: Document | None
    paragraphs_total: int = 0
    paragraphs_flagged: int = 0
    shingles_inserted: int = 0
    words_removed: int = 0


def dedup_document(doc: Document, bloom: BloomFilter, config: ShingleConfig = ShingleConfig()) -> DedupOutcome:
    """Flag near-duplicate paragraphs against the shared filter.

    Membership is tested against the filter plus an overlay of shingles from
    this document's own novel paragraphs, so intra-document repeats are
    caught. Insertions are committed only after the document-level decision:
    a dropped document contributes nothing to the seen-set.
    """
    parts = doc.text.split(config.paragraph_separator)
    overlay: set[tuple[int, int]] = set()
    flagged_idx: set[int] = set()
    evaluated = 0
    words_removed = 0
    for idx, part in enumerate(parts):
        hashes = [shingle_hash(s) for s in shingle(part, config)]
        if not hashes:
            continue
        evaluated += 1
        present = sum(1 for h in hashes if h in overlay or h in bloom)
        if present / len(hashes) > config.dup_shingle_threshold:
            flagged_idx.add(idx)
            words_removed += count_words(part)
        else:
            overlay.update(hashes)

    if evaluated and len(flagged_idx) / evaluated >= config.doc_fallback_para_threshold:
        return DedupOutcome(
            kept=False,
            doc=None,
            paragraphs_total=evaluated,
            paragraphs_flagged=len(flagged_idx),
            shingles_inserted=0,
            words_removed=doc.word_count(),
        )

    bloom.add_pairs(sorted(overlay))

    if not flagged_idx:
        return DedupOutcome(
            kept=True,
            doc=doc,
            paragraphs_total=evaluated,
            paragraphs_flagged=0,
            shingles_inserted=len(overlay),
        )
    kept_parts = [p for i, p in enumerate(parts) if i not in flagged_idx]
    new_doc = doc.with_text(config.paragraph_separator.join(kept_parts))
    return DedupOutcome(
        kept=True,
        doc=new_doc,
        paragraphs_total=evaluated,
        paragraphs_flagged=len(flagged_idx),
        shingles_inserted=len(overlay),
        words_removed=words_removed,
    )


@dataclass
class DedupStats:
    m_bits: int = 0
    k: int = 0
    inserted: int = 0
    sparsity: float = 0.0
    paragraphs_total: int = 0
    paragraphs_flagged: int = 0
    documents_in: int = 0
    documents_out: int = 0
    documents_dropped: int = 0
    documents_pruned: int = 0
    bytes_in: int = 0
    bytes_out: int = 0
    tokens_in: int = 0
    tokens_out: int = 0

    def to_dict(self) -> dict:
        return {
            "m_bits": self.m_bits,
            # Filter size in both decimal and binary units; published bin
            # sizes are ambiguous between the two.
            "filter_gb": round(self.m_bits / 8 / 1e9, 3),
            "filter_gib": round(self.m_bits / 8 / 2**30, 3),
            "k": self.k,
            "inserted": self.inserted,
            "sparsity": round(self.sparsity, 6),
            "paragraphs_total": self.paragraphs_total,
            "paragraphs_flagged": self.paragraphs_flagged,
            "documents_in": self.documents_in,
            "documents_out": self.documents_out,
            "documents_dropped": self.documents_dropped,
            "documents_pruned": self.documents_pruned,
            "bytes_in": self.bytes_in,
            "bytes_out": self.bytes_out,
            "tokens_in": self.tokens_in,
            "tokens_out": self.tokens_out,
        }


def run_dedup(
    docs: Iterable[Document],
    fp_rate: float,
    expected_ngrams: float,
    config: ShingleConfig = ShingleConfig(),
    max_bytes: int | None = None,
    bloom: BloomFilter | None = None,
    out_stream: IO | None = None,
) -> tuple[list[Document], DedupStats]:
    """Stream documents through a single shared filter in input order.

    Kept documents are returned (and optionally written as JSONL). The
    filter may be supplied to continue an earlier pass across files.
    """
    from webcurate.corpus import document_to_json

    bloom = bloom or BloomFilter(fp_rate, expected_ngrams, max_bytes=max_bytes)
    stats = DedupStats(m_bits=bloom.m_bits, k=bloom.k)
    kept_docs: list[Document] = []
    for doc in docs:
        stats.documents_in += 1
        stats.bytes_in += len(doc.text.encode("utf-8"))
        stats.tokens_in += doc.word_count()
        outcome = dedup_document(doc, bloom, config)
        stats.paragraphs_total += outcome.paragraphs_total
        stats.paragraphs_flagged += outcome.paragraphs_flagged
        if not outcome.kept:
            stats.documents_dropped += 1
            continue
        if outcome.paragraphs_flagged:
            stats.documents_pruned += 1
        out = outcome.doc
        stats.documents_out += 1
        stats.bytes_out += len(out.text.encode("utf-8"))
        stats.tokens_out += out.word_count()
        if out_stream is not None:
            out_stream.write(document_to_json(out) + "\n")
        else:
            kept_docs.append(out)
    stats.inserted = bloom.inserted
    stats.sparsity = bloom.sparsity()
    return kept_docs, stats
