"""Document model, JSONL ingestion/emission and word counting.

Documents are plain values: every stage receives a document and returns a
verdict and (possibly) a replacement document, so they are safe to process
on any worker. Unknown JSON fields are carried through untouched.
"""

from __future__ import annotations

import gzip
import io
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import IO, Callable, Iterable, Iterator

# Metadata keys that carry the canonical URL of a crawled record. They win
# over the plain "url" field when present.
_TARGET_URI_KEYS = ("WARC-Target-URI", "Target-URI")


class VerdictKind(Enum):
    KEEP = "keep"
    REJECT = "reject"
    MODIFIED = "modified"


@dataclass(frozen=True)
class Verdict:
    """Outcome of one filter stage for one document."""

    kind: VerdictKind
    stage: str = ""
    criterion: str = ""
    words_removed: int = 0

    def __post_init__(self) -> None:
        if self.kind is VerdictKind.REJECT and not self.criterion:
            raise ValueError("Reject verdicts must name a criterion")
        if self.words_removed < 0:
            raise ValueError("words_removed must be >= 0")

    @property
    def is_reject(self) -> bool:
        return self.kind is VerdictKind.REJECT

    @staticmethod
    def keep() -> "Verdict":
        return _KEEP

    @staticmethod
    def reject(stage: str, criterion: str, words_removed: int = 0) -> "Verdict":
        return Verdict(VerdictKind.REJECT, stage, criterion, words_removed)

    @staticmethod
    def modified(stage: str, criterion: str = "", words_removed: int = 0) -> "Verdict":
        return Verdict(VerdictKind.MODIFIED, stage, criterion, words_removed)


_KEEP = Verdict(VerdictKind.KEEP)


@dataclass
class Document:
    """One web record flowing through the pipeline.

    ``id`` stays stable across all stages. ``lines`` is a view derived from
    ``text``; rejoining it with a newline reproduces ``text`` exactly.
    """

    id: str
    url: str
    text: str
    meta: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def lines(self) -> list[str]:
        return self.text.split("\n")

    def with_text(self, text: str) -> "Document":
        return replace(self, text=text)

    def word_count(self) -> int:
        return count_words(self.text)

    def to_record(self) -> dict:
        record = {"id": self.id, "url": self.url, "text": self.text}
        if self.meta:
            record["metadata"] = self.meta
        record.update(self.extra)
        return record


@dataclass(frozen=True)
class ParseFailure:
    """A JSONL line that could not be turned into a Document.

    Excluded from every rejection statistic; only the count is reported.
    """

    line_no: int
    error: str


def count_words(text: str) -> int:
    """Number of maximal non-whitespace runs in ``text``."""
    return len(text.split())


class WordCounter:
    """Token counting used for all "tokens removed" accounting.

    Defaults to whitespace word counting; an external counter (e.g. a BPE
    tokenizer) can be plugged in without touching any stage.
    """

    def __init__(self, fn: Callable[[str], int] | None = None):
        self._fn = fn

    @property
    def mode(self) -> str:
        return "pluggable" if self._fn is not None else "whitespace"

    def count(self, text: str) -> int:
        if self._fn is not None:
            return self._fn(text)
        return count_words(text)


def _document_from_record(record: dict, ordinal: int) -> Document:
    if not isinstance(record, dict) or "text" not in record:
        raise ValueError("record has no text field")
    text = record["text"]
    if not isinstance(text, str):
        raise ValueError("text field is not a string")
    meta = record.get("metadata") or {}
    if not isinstance(meta, dict):
        raise ValueError("metadata field is not an object")

    url = ""
    for key in _TARGET_URI_KEYS:
        if meta.get(key):
            url = str(meta[key])
            break
    else:
        if record.get("url"):
            url = str(record["url"])

    doc_id = str(record["id"]) if record.get("id") is not None else f"doc-{ordinal:08d}"
    extra = {k: v for k, v in record.items() if k not in ("id", "url", "text", "metadata")}
    return Document(id=doc_id, url=url, text=text, meta=dict(meta), extra=extra)


def read_jsonl(stream: IO, start_ordinal: int = 0) -> Iterator[Document | ParseFailure]:
    """Parse newline-delimited JSON records into documents.

    Malformed lines yield :class:`ParseFailure` instead of aborting; they are
    excluded from all rejection statistics. Accepts text or binary streams.
    """
    if isinstance(stream, (io.RawIOBase, io.BufferedIOBase, gzip.GzipFile)):
        stream = io.TextIOWrapper(stream, encoding="utf-8", errors="replace")
    line_no = 0
    try:
        for line_no, line in enumerate(stream, start=1):
            if not line.strip():
                continue
            ordinal = start_ordinal + line_no - 1
            try:
                record = json.loads(line)
                yield _document_from_record(record, ordinal)
            except (ValueError, TypeError) as exc:
                yield ParseFailure(line_no=line_no, error=str(exc))
    except OSError as exc:
        raise OSError(f"I/O failure after record at line {line_no}: {exc}") from exc


def read_jsonl_path(path: str, start_ordinal: int = 0) -> Iterator[Document | ParseFailure]:
    """Like :func:`read_jsonl` but opens ``path``, transparently gunzipping."""
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rt", encoding="utf-8", errors="replace") as fh:
        yield from read_jsonl(fh, start_ordinal=start_ordinal)


def document_to_json(doc: Document) -> str:
    return json.dumps(doc.to_record(), ensure_ascii=False, sort_keys=True)


def rejected_to_json(doc: Document, verdict: Verdict) -> str:
    record = doc.to_record()
    record["rejected_by"] = {"stage": verdict.stage, "criterion": verdict.criterion}
    return json.dumps(record, ensure_ascii=False, sort_keys=True)


def write_jsonl(
    pairs: Iterable[tuple[Document, Verdict]],
    kept_stream: IO,
    rejected_stream: IO,
) -> tuple[int, int]:
    """Split (document, verdict) pairs into kept and rejected JSONL streams.

    Rejected records carry a ``rejected_by`` object naming the stage and
    criterion. Returns (kept, rejected) counts.
    """
    kept = rejected = 0
    for doc, verdict in pairs:
        if verdict.is_reject:
            rejected_stream.write(rejected_to_json(doc, verdict) + "\n")
            rejected += 1
        else:
            kept_stream.write(document_to_json(doc) + "\n")
            kept += 1
    return kept, rejected
