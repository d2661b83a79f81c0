"""Dual-bin logical-OR classification gate, benchmark-proximity scoring,
training-set construction, and a built-in trainable hashed n-gram scorer.

The two bins are pluggable scorers; any object with ``score(text) -> float
in [0, 1]`` works. The bundled scorer is a logistic model over hashed
unigram+bigram counts so that the full pipeline runs with zero external
model files.
"""

from __future__ import annotations

import hashlib
import logging
import random
import struct
from dataclasses import dataclass, field

import numpy as np

from webcurate.corpus import Document

log = logging.getLogger(__name__)

STAGE_GATE = "quality_gate"

BIN_DCLM = "DCLM"
BIN_BETR = "BETR"

DEFAULT_TAU_DCLM = 0.025119
DEFAULT_TAU_BETR = 0.76

_MODEL_MAGIC = b"WCNG"
_MODEL_VERSION = 1


@dataclass(frozen=True)
class BinThresholds:
    tau_dclm: float = DEFAULT_TAU_DCLM
    tau_betr: float = DEFAULT_TAU_BETR

    def __post_init__(self) -> None:
        for name in ("tau_dclm", "tau_betr"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")


@dataclass(frozen=True)
class GateDecision:
    s_dclm: float
    s_betr: float
    accepted: bool
    accepting_bins: tuple[str, ...] = ()
    error: str = ""


def gate(doc: Document, scorer_dclm, scorer_betr, thresholds: BinThresholds = BinThresholds()) -> GateDecision:
    """Accept iff either bin's score meets its threshold (boundary accepts).

    Both scores are recorded even when the first bin already accepts. A
    scorer failure rejects the document with the error recorded so the
    pipeline can count it under a distinct criterion.
    """
    try:
        s_dclm = float(scorer_dclm.score(doc.text))
        s_betr = float(scorer_betr.score(doc.text))
    except Exception as exc:
        log.warning("scorer failed on doc %s: %s", doc.id, exc)
        return GateDecision(0.0, 0.0, accepted=False, error=str(exc))
    bins = []
    if s_dclm >= thresholds.tau_dclm:
        bins.append(BIN_DCLM)
    if s_betr >= thresholds.tau_betr:
        bins.append(BIN_BETR)
    return GateDecision(s_dclm, s_betr, accepted=bool(bins), accepting_bins=tuple(bins))


def cosine(u, v) -> float:
    """Cosine similarity of two equal-dimension nonzero vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine undefined for zero vectors")
    return float(np.dot(u, v) / (nu * nv))


@dataclass(frozen=True)
class BetrScore:
    doc_id: str
    max_cosine: float


def betr_score_corpus(doc_ids, doc_embeddings, benchmark_embeddings) -> list[BetrScore]:
    """Per document, the maximum cosine similarity over the union of all
    benchmark example embeddings."""
    docs = np.asarray(doc_embeddings, dtype=np.float64)
    bench = np.asarray(benchmark_embeddings, dtype=np.float64)
    if docs.ndim != 2 or bench.ndim != 2 or docs.shape[1] != bench.shape[1]:
        raise ValueError(
            f"embedding dimension mismatch: docs {docs.shape} vs benchmarks {bench.shape}"
        )
    if len(doc_ids) != docs.shape[0]:
        raise ValueError("doc_ids and doc_embeddings length mismatch")
    doc_norms = np.linalg.norm(docs, axis=1)
    bench_norms = np.linalg.norm(bench, axis=1)
    if (doc_norms == 0).any() or (bench_norms == 0).any():
        raise ValueError("cosine undefined for zero vectors")
    sims = (docs / doc_norms[:, None]) @ (bench / bench_norms[:, None]).T
    best = sims.max(axis=1)
    return [BetrScore(doc_id=str(d), max_cosine=float(s)) for d, s in zip(doc_ids, best)]


@dataclass(frozen=True)
class LabeledExample:
    doc_id: str
    text: str
    label: int  # 1 = positive, 0 = negative


def build_betr_training_set(
    scores: list[BetrScore],
    corpus: dict[str, Document],
    target_size: int,
    seed: int = 42,
) -> list[LabeledExample]:
    """Positives from the top 10% by score, negatives sampled uniformly from
    the remaining 90%; balanced at target_size/2 each.

    Score ties at the boundary break by ascending document id. If the corpus
    cannot fill a side, all available documents are used with a warning.
    """
    if target_size < 0 or target_size % 2 != 0:
        raise ValueError("target_size must be even and >= 0")
    if target_size == 0:
        return []
    ordered = sorted(scores, key=lambda s: (-s.max_cosine, s.doc_id))
    top_k = len(ordered) // 10
    half = target_size // 2
    pos_pool = ordered[:top_k]
    neg_pool = ordered[top_k:]
    if len(pos_pool) < half or len(neg_pool) < half:
        log.warning(
            "corpus of %d docs cannot fill a balanced %d-example set; using all available",
            len(ordered), target_size,
        )
    positives = pos_pool[:half]
    rng = random.Random(seed)
    negatives = rng.sample(neg_pool, min(half, len(neg_pool)))
    out = [LabeledExample(s.doc_id, corpus[s.doc_id].text, 1) for s in positives]
    out.extend(LabeledExample(s.doc_id, corpus[s.doc_id].text, 0) for s in negatives)
    return out


@dataclass(frozen=True)
class ScorerTrainConfig:
    learning_rate: float = 0.1
    epochs: int = 5
    buckets: int = 1 << 21
    seed: int = 42
    min_word_count: int = 1
    use_bigrams: bool = True


def _feature_buckets(text: str, buckets: int, use_bigrams: bool) -> dict[int, int]:
    words = text.lower().split()
    counts: dict[int, int] = {}
    for token in words:
        b = _bucket_of(token, buckets)
        counts[b] = counts.get(b, 0) + 1
    if use_bigrams:
        for a, b_ in zip(words, words[1:]):
            b = _bucket_of(a + " " + b_, buckets)
            counts[b] = counts.get(b, 0) + 1
    return counts


def _bucket_of(token: str, buckets: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, salt=b"wc-ngram").digest()
    return int.from_bytes(digest, "little") % buckets


@dataclass
class NgramScorerModel:
    """Logistic model over hashed unigram+bigram counts.

    Inference is deterministic given the model bytes; scores are the
    positive-class probability in [0, 1].
    """

    buckets: int
    seed: int
    use_bigrams: bool
    weights: np.ndarray = field(repr=False)
    bias: float = 0.0

    def score(self, text: str) -> float:
        feats = _feature_buckets(text, self.buckets, self.use_bigrams)
        z = self.bias + sum(self.weights[b] * c for b, c in feats.items())
        return float(1.0 / (1.0 + np.exp(-z)))

    def save(self, path: str) -> None:
        header = struct.pack(
            "<4sHHQQd",
            _MODEL_MAGIC,
            _MODEL_VERSION,
            1 if self.use_bigrams else 0,
            self.buckets,
            self.seed,
            self.bias,
        )
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(self.weights.astype("<f8").tobytes())

    @classmethod
    def load(cls, path: str) -> "NgramScorerModel":
        header_size = struct.calcsize("<4sHHQQd")
        with open(path, "rb") as fh:
            header = fh.read(header_size)
            magic, version, bigrams, buckets, seed, bias = struct.unpack("<4sHHQQd", header)
            if magic != _MODEL_MAGIC:
                raise ValueError(f"not a scorer model file: bad magic {magic!r}")
            if version != _MODEL_VERSION:
                raise ValueError(f"unsupported scorer model version {version}")
            weights = np.frombuffer(fh.read(), dtype="<f8").copy()
        if len(weights) != buckets:
            raise ValueError("scorer model truncated")
        return cls(buckets=buckets, seed=seed, use_bigrams=bool(bigrams), weights=weights, bias=bias)


def train_ngram_scorer(
    examples: list[LabeledExample],
    config: ScorerTrainConfig = ScorerTrainConfig(),
) -> NgramScorerModel:
    """Seeded SGD over logistic loss; bit-for-bit reproducible given the
    same example order and seed."""
    labels = {ex.label for ex in examples}
    if labels != {0, 1}:
        raise ValueError("training needs at least one example of each class")

    feature_rows = []
    for ex in examples:
        feats = _feature_buckets(ex.text, config.buckets, config.use_bigrams)
        row = [(b, float(c)) for b, c in sorted(feats.items())]
        feature_rows.append((row, float(ex.label)))

    if config.min_word_count > 1:
        seen: dict[int, int] = {}
        for row, _ in feature_rows:
            for b, _v in row:
                seen[b] = seen.get(b, 0) + 1
        keep = {b for b, c in seen.items() if c >= config.min_word_count}
        feature_rows = [
            ([(b, v) for b, v in row if b in keep], y) for row, y in feature_rows
        ]

    weights = np.zeros(config.buckets, dtype=np.float64)
    bias = 0.0
    rng = np.random.default_rng(config.seed)
    lr = config.learning_rate
    for _ in range(config.epochs):
        for idx in rng.permutation(len(feature_rows)):
            row, y = feature_rows[idx]
            z = bias + sum(weights[b] * v for b, v in row)
            p = 1.0 / (1.0 + np.exp(-z))
            g = p - y
            for b, v in row:
                weights[b] -= lr * g * v
            bias -= lr * g
    return NgramScorerModel(
        buckets=config.buckets,
        seed=config.seed,
        use_bigrams=config.use_bigrams,
        weights=weights,
        bias=float(bias),
    )


def score_with_model(model: NgramScorerModel, doc: Document) -> float:
    return model.score(doc.text)


@dataclass
class SweepResult:
    tau_dclm: float
    tau_betr: float
    docs_in: int
    docs_kept: int
    tokens_in: int
    tokens_kept: int

    @property
    def retention_pct(self) -> float:
        return 100.0 * self.tokens_kept / self.tokens_in if self.tokens_in else 0.0

    def to_dict(self) -> dict:
        return {
            "tau_dclm": self.tau_dclm,
            "tau_betr": self.tau_betr,
            "docs_in": self.docs_in,
            "docs_kept": self.docs_kept,
            "tokens_in": self.tokens_in,
            "tokens_kept": self.tokens_kept,
            "retention_pct": round(self.retention_pct, 4),
        }


def sweep_thresholds(
    scored_docs,
    pairs: list[tuple[float, float]],
) -> list[SweepResult]:
    """Evaluate the OR rule for every (tau_dclm, tau_betr) pair in one pass.

    ``scored_docs`` yields (s_dclm, s_betr, token_count) triples.
    """
    results = [SweepResult(td, tb, 0, 0, 0, 0) for td, tb in pairs]
    for s_dclm, s_betr, tokens in scored_docs:
        for res in results:
            res.docs_in += 1
            res.tokens_in += tokens
            if s_dclm >= res.tau_dclm or s_betr >= res.tau_betr:
                res.docs_kept += 1
                res.tokens_kept += tokens
    return results
