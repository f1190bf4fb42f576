"""Evidence snippets, the retrieval backend contract, and deduplicated merging."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from typing import Any, Iterable, Iterator, Mapping, Protocol, Sequence

from .errors import InvalidInputError, PayloadError
from .textnorm import collapse_ws

logger = logging.getLogger(__name__)

FIRST_PASS = "first"
SECOND_PASS = "second"
PROMPT_BODY_LIMIT = 1500


@dataclass(frozen=True)
class EvidenceSnippet:
    title: str
    url: str | None
    body: str
    source_query: str
    retrieval_pass: str = FIRST_PASS

    def __post_init__(self) -> None:
        if not self.body or not self.body.strip():
            raise InvalidInputError("evidence body must be non-empty")
        if self.retrieval_pass not in (FIRST_PASS, SECOND_PASS):
            raise InvalidInputError(f"unknown retrieval pass {self.retrieval_pass!r}")

    @property
    def dedupe_key(self) -> str:
        if self.url and self.url.strip():
            return "url:" + self.url.strip().lower()
        body = collapse_ws(self.body.lower())
        return "body:" + hashlib.sha1(body.encode("utf-8")).hexdigest()

    def to_dict(self) -> dict[str, Any]:
        return {
            "title": self.title,
            "url": self.url,
            "body": self.body,
            "source_query": self.source_query,
            "pass": self.retrieval_pass,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EvidenceSnippet":
        return cls(
            title=data.get("title") or "",
            url=data.get("url"),
            body=data["body"],
            source_query=data.get("source_query", ""),
            retrieval_pass=data.get("pass", FIRST_PASS),
        )


class EvidenceSet(Sequence[EvidenceSnippet]):
    """Immutable, ordered, duplicate-free collection of snippets.

    Construction drops any snippet whose dedupe key was already seen, keeping
    the earliest occurrence, so order is stable.
    """

    __slots__ = ("_snippets",)

    def __init__(self, snippets: Iterable[EvidenceSnippet] = ()):
        seen: set[str] = set()
        kept: list[EvidenceSnippet] = []
        for snip in snippets:
            key = snip.dedupe_key
            if key not in seen:
                seen.add(key)
                kept.append(snip)
        self._snippets = tuple(kept)

    def __getitem__(self, idx):  # type: ignore[override]
        return self._snippets[idx]

    def __len__(self) -> int:
        return len(self._snippets)

    def __iter__(self) -> Iterator[EvidenceSnippet]:
        return iter(self._snippets)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, EvidenceSet):
            return self._snippets == other._snippets
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._snippets)

    def __repr__(self) -> str:
        return f"EvidenceSet({len(self)} snippets)"

    def to_list(self) -> list[dict[str, Any]]:
        return [s.to_dict() for s in self._snippets]


class RetrievalBackend(Protocol):
    """Anything that can answer ``search(query, k)`` with raw hit records.

    Each hit is a mapping with at least a ``text`` field, optionally ``title`` and
    ``url``. Transport failures surface as RetrievalUnavailableError.
    """

    def search(self, query: str, k: int) -> list[Mapping[str, Any]]: ...


def _hit_to_snippet(hit: Any, query: str, retrieval_pass: str) -> EvidenceSnippet | None:
    if isinstance(hit, EvidenceSnippet):
        return EvidenceSnippet(hit.title, hit.url, hit.body, query, retrieval_pass)
    if not isinstance(hit, Mapping):
        raise PayloadError(f"retrieval hit is not an object: {type(hit).__name__}")
    body = hit.get("text", hit.get("body"))
    if body is None:
        raise PayloadError("retrieval hit has no text field")
    if not isinstance(body, str):
        raise PayloadError("retrieval hit text is not a string")
    if not body.strip():
        logger.debug("dropping empty snippet for query %r", query)
        return None
    title = hit.get("title") or ""
    url = hit.get("url") or None
    if not isinstance(title, str) or (url is not None and not isinstance(url, str)):
        raise PayloadError("retrieval hit title/url must be strings")
    return EvidenceSnippet(title, url, body, query, retrieval_pass)


def retrieve(
    backend: RetrievalBackend, query: str, k: int, retrieval_pass: str = FIRST_PASS
) -> list[EvidenceSnippet]:
    """Fetch at most ``k`` snippets for ``query``; an empty result is not an error."""
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    if not query or not query.strip():
        raise InvalidInputError("query must be non-empty")
    hits = backend.search(query, k)
    if not isinstance(hits, list):
        raise PayloadError("retrieval backend must return a list of hits")
    out: list[EvidenceSnippet] = []
    for hit in hits:
        snip = _hit_to_snippet(hit, query, retrieval_pass)
        if snip is not None:
            out.append(snip)
        if len(out) == k:
            break
    return out


def merge_dedupe(base: EvidenceSet, extra: Iterable[EvidenceSnippet]) -> EvidenceSet:
    """Union of ``base`` and ``extra``; base snippets keep their positions."""
    return EvidenceSet([*base, *extra])


def render_evidence(evidence: Iterable[EvidenceSnippet], limit: int = PROMPT_BODY_LIMIT) -> str:
    """Numbered evidence block for prompts; bodies are cut at ``limit`` characters."""
    lines = []
    for i, snip in enumerate(evidence, 1):
        head = f"[{i}] {snip.title}".rstrip()
        if snip.url:
            head += f" ({snip.url})"
        body = collapse_ws(snip.body)
        if len(body) > limit:
            body = body[:limit].rstrip() + " ..."
        lines.append(f"{head}\n{body}")
    return "\n\n".join(lines) if lines else "(no evidence retrieved)"
