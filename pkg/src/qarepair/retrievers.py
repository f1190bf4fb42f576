"""Built-in retrieval backends: scripted mock, local BM25 corpus, HTTP web search."""

from __future__ import annotations

import json
import logging
import math
import re
import time
from collections import Counter
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

import httpx

from ._http import JsonFileCache, post_json, resolve_token
from .errors import PayloadError, RetrievalUnavailableError

logger = logging.getLogger(__name__)


class ScriptedRetriever:
    """Maps exact query strings to canned hit lists; unknown queries get ``default``.

    Queries listed in ``unavailable`` raise RetrievalUnavailableError, which lets
    tests drive the degraded paths without a network.
    """

    def __init__(
        self,
        script: Mapping[str, list[Mapping[str, Any]]],
        default: list[Mapping[str, Any]] | None = None,
        unavailable: Iterable[str] = (),
    ):
        self.script = {q: list(hits) for q, hits in script.items()}
        self.default = list(default or [])
        self.unavailable = frozenset(unavailable)
        self.calls: list[tuple[str, int]] = []

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedRetriever":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise PayloadError(f"{path}: retrieval script must be a JSON object")
        if isinstance(data.get("queries"), dict):
            return cls(data["queries"], data.get("default"), data.get("unavailable", ()))
        return cls(data)

    def search(self, query: str, k: int) -> list[Mapping[str, Any]]:
        self.calls.append((query, k))
        if query in self.unavailable:
            raise RetrievalUnavailableError(f"scripted outage for {query!r}")
        return list(self.script.get(query, self.default))[:k]


_TOKEN = re.compile(r"\w+")


def _bm25_tokens(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


class LocalCorpusRetriever:
    """Okapi BM25 over an in-memory list of ``{"title", "url", "text"}`` records."""

    def __init__(self, docs: list[Mapping[str, Any]], k1: float = 1.5, b: float = 0.75):
        self.docs = [dict(d) for d in docs]
        self.k1 = k1
        self.b = b
        self._tf: list[Counter[str]] = []
        self._len: list[int] = []
        df: Counter[str] = Counter()
        for doc in self.docs:
            toks = _bm25_tokens(f"{doc.get('title') or ''} {doc['text']}")
            tf = Counter(toks)
            self._tf.append(tf)
            self._len.append(len(toks))
            df.update(tf.keys())
        n = len(self.docs)
        self._avgdl = (sum(self._len) / n) if n else 0.0
        self._idf = {t: math.log(1 + (n - c + 0.5) / (c + 0.5)) for t, c in df.items()}

    @classmethod
    def from_jsonl(cls, path: str | Path, **kwargs: float) -> "LocalCorpusRetriever":
        docs = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except ValueError as exc:
                    raise PayloadError(f"{path}:{lineno}: invalid JSON") from exc
                if not isinstance(rec, dict) or not isinstance(rec.get("text"), str):
                    raise PayloadError(f"{path}:{lineno}: expected an object with a string 'text'")
                docs.append(rec)
        return cls(docs, **kwargs)

    def score(self, query: str) -> list[float]:
        q_terms = [t for t in _bm25_tokens(query) if t in self._idf]
        scores = []
        for tf, dl in zip(self._tf, self._len):
            s = 0.0
            for term in q_terms:
                f = tf.get(term, 0)
                if f:
                    denom = f + self.k1 * (1 - self.b + self.b * dl / self._avgdl)
                    s += self._idf[term] * f * (self.k1 + 1) / denom
            scores.append(s)
        return scores

    def search(self, query: str, k: int) -> list[Mapping[str, Any]]:
        scores = self.score(query)
        ranked = sorted((i for i, s in enumerate(scores) if s > 0), key=lambda i: (-scores[i], i))
        return [
            {"title": self.docs[i].get("title") or "", "url": self.docs[i].get("url"), "text": self.docs[i]["text"]}
            for i in ranked[:k]
        ]


class WebSearchRetriever:
    """JSON-over-HTTP search adapter.

    Request: ``POST endpoint {"query": str, "max_results": int}`` with a bearer token.
    Response: ``{"results": [{"title", "url", "content" | "text" | "snippet"}]}``.
    """

    def __init__(
        self,
        endpoint: str,
        auth_env: str | None = None,
        timeout: float = 20.0,
        max_retries: int = 3,
        cache_dir: str | Path | None = None,
        backoff: float = 0.5,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint
        self._token = resolve_token(auth_env)
        self.max_retries = max_retries
        self.backoff = backoff
        self.cache = JsonFileCache(cache_dir) if cache_dir else None
        self._sleep = sleep
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def search(self, query: str, k: int) -> list[Mapping[str, Any]]:
        key = JsonFileCache.key("search", self.endpoint, query, k)
        if self.cache is not None:
            cached = self.cache.get(key)
            if cached is not None:
                return cached
        data = post_json(
            self._client,
            self.endpoint,
            {"query": query, "max_results": k},
            token=self._token,
            max_retries=self.max_retries,
            backoff=self.backoff,
            unavailable=RetrievalUnavailableError,
            sleep=self._sleep,
        )
        if not isinstance(data, dict) or not isinstance(data.get("results"), list):
            raise PayloadError("search response lacks a 'results' list")
        hits = []
        for item in data["results"]:
            if not isinstance(item, dict):
                raise PayloadError("search result is not an object")
            text = item.get("text") or item.get("content") or item.get("snippet")
            if text is None:
                raise PayloadError("search result has no text/content/snippet")
            hits.append({"title": item.get("title") or "", "url": item.get("url"), "text": text})
        if self.cache is not None:
            self.cache.put(key, hits)
        return hits

    def close(self) -> None:
        self._client.close()
