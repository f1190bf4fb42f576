"""Text normalization helpers and the versioned word lists shipped with the package."""

from __future__ import annotations

import hashlib
import re
import string
import unicodedata
from functools import lru_cache
from importlib import resources

_WS = re.compile(r"\s+")
ARTICLES = frozenset({"a", "an", "the"})

# Lowercased, punctuation-free forms of answers that do not answer anything.
NON_ANSWERS = frozenset(
    {
        "unknown",
        "i dont know",
        "i do not know",
        "dont know",
        "not sure",
        "na",
        "no answer",
        "cannot determine",
        "cannot be determined",
        "cant determine",
        "insufficient information",
        "not enough information",
        "not found",
        "unclear",
        "not specified",
        "not mentioned",
        "unanswerable",
    }
)


def _is_punct(ch: str) -> bool:
    return ch in string.punctuation or unicodedata.category(ch).startswith("P")


def strip_punct(text: str) -> str:
    return "".join(ch for ch in text if not _is_punct(ch))


def collapse_ws(text: str) -> str:
    return _WS.sub(" ", text).strip()


def normalize(text: str) -> str:
    """Lowercase, delete punctuation and collapse whitespace."""
    return collapse_ws(strip_punct(text.lower()))


def squad_normalize(text: str) -> str:
    """SQuAD answer normalization: lowercase, no punctuation, no articles, single spaces."""
    return " ".join(t for t in strip_punct(text.lower()).split() if t not in ARTICLES)


def tokens(text: str) -> list[str]:
    return normalize(text).split()


def is_non_answer(text: str) -> bool:
    norm = normalize(text)
    return not norm or norm in NON_ANSWERS


class WordList:
    """A frozen word list loaded from a package data file, with its content hash."""

    def __init__(self, name: str, words: frozenset[str], sha256: str):
        self.name = name
        self.words = words
        self.sha256 = sha256

    def __contains__(self, word: object) -> bool:
        return word in self.words

    def __len__(self) -> int:
        return len(self.words)


def _load_wordlist(filename: str) -> WordList:
    raw = resources.files("qarepair.data").joinpath(filename).read_bytes()
    words: set[str] = set()
    for line in raw.decode("utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        words.update(w.lower() for w in line.split())
    return WordList(filename, frozenset(words), hashlib.sha256(raw).hexdigest())


@lru_cache(maxsize=None)
def stopwords() -> WordList:
    return _load_wordlist("stopwords.txt")


@lru_cache(maxsize=None)
def months() -> WordList:
    return _load_wordlist("months.txt")


def resource_hashes() -> dict[str, str]:
    return {"stopwords": stopwords().sha256, "months": months().sha256}
