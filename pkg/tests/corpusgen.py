"""Synthetic web-like corpus generation shared by the test suite.

Documents mix Zipf-distributed content words with English function words so
they behave like ordinary web prose under the quality gates and the
heuristic language scorer.
"""

from __future__ import annotations

import json
import random
import string

FUNCTION_WORDS = (
    "the of and to in a is that it was for on are as with his they be at "
    "one have this from or had by but what some we can out other were all "
    "there when up use your how said an each she which do their time if "
    "will way about many then them would like so these her long make thing "
    "see him two has look more day could go come did my no most who over "
    "know than call first people may down side been now find"
).split()

_CONSONANT = "bcdfghjklmnpqrstvwz"
_VOWEL = "aeiou"


def synthetic_vocab(size: int = 20000, seed: int = 0) -> list[str]:
    """Pronounceable pseudo-words, 3-12 characters, all distinct."""
    rng = random.Random(seed)
    vocab: set[str] = set()
    while len(vocab) < size:
        syllables = rng.randint(2, 4)
        word = "".join(
            rng.choice(_CONSONANT) + rng.choice(_VOWEL) + (rng.choice(_CONSONANT) if rng.random() < 0.3 else "")
            for _ in range(syllables)
        )
        if word not in FUNCTION_WORDS:
            vocab.add(word)
    return sorted(vocab)


def _zipf_index(rng: random.Random, size: int) -> int:
    # Inverse-CDF sample of an ~s=1.1 Zipf over [0, size)
    u = rng.random()
    return min(int(size ** u) - 1 if size ** u >= 1 else 0, size - 1)


def sentence(rng: random.Random, vocab: list[str], n_words: int) -> str:
    words = []
    for _ in range(n_words):
        if rng.random() < 0.45:
            words.append(rng.choice(FUNCTION_WORDS))
        else:
            words.append(vocab[_zipf_index(rng, len(vocab))])
    words[0] = words[0].capitalize()
    return " ".join(words) + "."


def document_text(
    rng: random.Random,
    vocab: list[str],
    min_words: int = 60,
    max_words: int = 400,
    boilerplate: bool = False,
) -> str:
    target = rng.randint(min_words, max_words)
    lines = []
    made = 0
    while made < target:
        n = min(rng.randint(8, 16), target - made) or 1
        lines.append(sentence(rng, vocab, n))
        made += n
        if rng.random() < 0.2:
            lines.append("")  # paragraph break
    if boilerplate:
        extras = [
            "HOME | ABOUT | CONTACT",
            "12K likes",
            "2024-03-15",
            "Follow us on everything",
            "Subscribe now for updates",
        ]
        lines.insert(0, rng.choice(extras))
        lines.append(rng.choice(extras))
    return "\n".join(lines)


def non_english_text(rng: random.Random, n_words: int = 120) -> str:
    # Cyrillic-ish filler that the heuristic scorer routes away from English
    alphabet = "абвгдежзиклмнопрстуфхцчшщэюя"
    words = ["".join(rng.choice(alphabet) for _ in range(rng.randint(3, 9))) for _ in range(n_words)]
    lines = []
    while words:
        take = min(len(words), rng.randint(6, 12))
        lines.append(" ".join(words[:take]))
        words = words[take:]
    return "\n".join(lines)


def make_record(rng: random.Random, vocab: list[str], doc_id: str, kind: str = "clean") -> dict:
    host = "".join(rng.choice(string.ascii_lowercase) for _ in range(10))
    url = f"http://{host}.example.com/{rng.randint(0, 10**6)}"
    if kind == "clean":
        text = document_text(rng, vocab)
    elif kind == "boilerplate":
        text = document_text(rng, vocab, boilerplate=True)
    elif kind == "short":
        text = sentence(rng, vocab, rng.randint(5, 30))
    elif kind == "non_english":
        text = non_english_text(rng)
    elif kind == "repetitive":
        line = sentence(rng, vocab, 8)
        text = "\n".join([line] * rng.randint(10, 20))
    else:
        raise ValueError(kind)
    return {"id": doc_id, "url": url, "text": text}


def write_corpus(
    path: str,
    n_docs: int | None = None,
    target_bytes: int | None = None,
    seed: int = 0,
    vocab_size: int = 20000,
    mix: dict | None = None,
) -> int:
    """Write a synthetic corpus; returns the document count.

    ``mix`` maps document kind to weight; default is mostly clean prose
    with a sprinkle of boilerplate, short, non-English and repetitive docs.
    """
    rng = random.Random(seed)
    vocab = synthetic_vocab(vocab_size, seed=seed)
    mix = mix or {"clean": 0.85, "boilerplate": 0.06, "short": 0.04, "non_english": 0.03, "repetitive": 0.02}
    kinds = list(mix)
    weights = [mix[k] for k in kinds]
    written = 0
    size = 0
    with open(path, "w", encoding="utf-8") as fh:
        while True:
            if n_docs is not None and written >= n_docs:
                break
            if target_bytes is not None and size >= target_bytes:
                break
            kind = rng.choices(kinds, weights)[0]
            record = make_record(rng, vocab, f"doc-{written:07d}", kind)
            line = json.dumps(record, ensure_ascii=False) + "\n"
            fh.write(line)
            size += len(line.encode("utf-8"))
            written += 1
    return written
