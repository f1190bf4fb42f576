"""Prompt construction, drafting with fallbacks, and refiner output parsing."""

from __future__ import annotations

import enum
import hashlib
import logging
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from string import Template
from typing import Any, Iterable

from .errors import (
    DraftUnavailableError,
    InvalidInputError,
    ModelUnavailableError,
    PayloadError,
    RefineUnavailableError,
)
from .evidence import EvidenceSnippet, render_evidence
from .models import ModelBackend
from .qtype import QuestionType
from .textnorm import is_non_answer

logger = logging.getLogger(__name__)

REQUIRED_SECTIONS = ("draft", "closed_book", "refine")
_SECTION = re.compile(r"^\[([a-z_]+)\]\s*$")


@dataclass(frozen=True)
class PromptSet:
    draft: Template
    closed_book: Template
    refine: Template
    sha256: str
    source: str


def parse_prompt_file(text: str, source: str = "<string>") -> PromptSet:
    sections: dict[str, list[str]] = {}
    current: list[str] | None = None
    for line in text.splitlines():
        m = _SECTION.match(line)
        if m:
            current = sections.setdefault(m.group(1), [])
        elif current is not None:
            current.append(line)
        elif line.strip() and not line.startswith("#"):
            raise InvalidInputError(f"{source}: text before the first [section] header")
    missing = [s for s in REQUIRED_SECTIONS if s not in sections]
    if missing:
        raise InvalidInputError(f"{source}: missing prompt sections {missing}")
    tmpl = {k: Template("\n".join(v).strip("\n")) for k, v in sections.items()}
    return PromptSet(
        draft=tmpl["draft"],
        closed_book=tmpl["closed_book"],
        refine=tmpl["refine"],
        sha256=hashlib.sha256(text.encode("utf-8")).hexdigest(),
        source=source,
    )


def load_prompts(path: str | Path | None = None) -> PromptSet:
    """Load a prompt template file; ``None`` selects the packaged default."""
    if path is None:
        text = resources.files("qarepair.prompts").joinpath("v1.txt").read_text(encoding="utf-8")
        return parse_prompt_file(text, "qarepair/prompts/v1.txt")
    return parse_prompt_file(Path(path).read_text(encoding="utf-8"), str(path))


class DraftOrigin(str, enum.Enum):
    RETRIEVED = "retrieved"
    CLOSED_BOOK = "closed_book"
    TYPE_DEFAULT = "type_default"


@dataclass(frozen=True)
class DraftAnswer:
    text: str
    origin: DraftOrigin = DraftOrigin.RETRIEVED

    def __post_init__(self) -> None:
        if not self.text or not self.text.strip():
            raise InvalidInputError("draft answer text must be non-empty")

    def to_dict(self) -> dict[str, str]:
        return {"text": self.text, "origin": self.origin.value}


class Decision(str, enum.Enum):
    KEEP = "KEEP"
    REVISE = "REVISE"


class ParseStatus(str, enum.Enum):
    OK = "ok"
    MALFORMED = "malformed"


@dataclass(frozen=True)
class RefinerVerdict:
    decision: Decision
    answer: str
    evidence: str | None
    parse_status: ParseStatus

    @property
    def is_ok(self) -> bool:
        return self.parse_status is ParseStatus.OK

    def to_dict(self) -> dict[str, Any]:
        return {
            "decision": self.decision.value,
            "answer": self.answer,
            "evidence": self.evidence,
            "parse_status": self.parse_status.value,
        }


MALFORMED = RefinerVerdict(Decision.KEEP, "", None, ParseStatus.MALFORMED)

# Minimal answers emitted when both model rungs produce nothing usable.
TYPE_DEFAULTS = {
    QuestionType.YESNO: "no",
    QuestionType.YEAR: "unknown",
    QuestionType.TEMPORAL: "unknown",
    QuestionType.NUMERIC: "0",
    QuestionType.LOCATION: "unknown",
    QuestionType.PERSON: "unknown",
    QuestionType.OTHER: "unknown",
}


def build_draft_prompt(prompts: PromptSet, question: str, evidence: Iterable[EvidenceSnippet]) -> str:
    return prompts.draft.safe_substitute(question=question.strip(), evidence=render_evidence(evidence))


def build_closed_book_prompt(prompts: PromptSet, question: str) -> str:
    return prompts.closed_book.safe_substitute(question=question.strip())


def build_refine_prompt(
    prompts: PromptSet, question: str, draft: DraftAnswer, evidence: Iterable[EvidenceSnippet]
) -> str:
    return prompts.refine.safe_substitute(
        question=question.strip(), draft=draft.text, evidence=render_evidence(evidence)
    )


_ANSWER_PREFIX = re.compile(r"^(?:final\s+)?answer\s*:\s*", re.IGNORECASE)
_QUOTES = "\"'`“”‘’"


def clean_answer(raw: str) -> str:
    """First non-empty line of a completion, minus an ``Answer:`` prefix and wrapping quotes."""
    for line in raw.splitlines():
        line = line.strip()
        if line:
            break
    else:
        return ""
    line = _ANSWER_PREFIX.sub("", line).strip().strip(_QUOTES).strip()
    if line.endswith(".") and line.count(".") == 1:
        line = line[:-1].rstrip()
    return line


def _usable(text: str) -> bool:
    return bool(text) and not is_non_answer(text)


def draft(
    model: ModelBackend,
    question: str,
    evidence: Iterable[EvidenceSnippet],
    qt: QuestionType,
    prompts: PromptSet | None = None,
) -> DraftAnswer:
    """Produce the first-pass answer, falling back from evidence to closed-book to a type default.

    Raises DraftUnavailableError only when every model rung that was attempted
    failed at the transport level.
    """
    prompts = prompts or load_prompts()
    evidence = list(evidence)
    attempts: list[tuple[DraftOrigin, str]] = []
    if evidence:
        attempts.append((DraftOrigin.RETRIEVED, build_draft_prompt(prompts, question, evidence)))
    attempts.append((DraftOrigin.CLOSED_BOOK, build_closed_book_prompt(prompts, question)))

    transport_failures = 0
    for origin, prompt in attempts:
        try:
            text = clean_answer(model.complete(prompt))
        except ModelUnavailableError as exc:
            logger.warning("draft rung %s unavailable: %s", origin.value, exc)
            transport_failures += 1
            continue
        except PayloadError as exc:
            logger.warning("draft rung %s returned an unusable payload: %s", origin.value, exc)
            continue
        if _usable(text):
            return DraftAnswer(text, origin)
    if transport_failures == len(attempts):
        raise DraftUnavailableError("all drafting rungs failed at the transport level")
    return DraftAnswer(TYPE_DEFAULTS[qt], DraftOrigin.TYPE_DEFAULT)


def refine_call(
    model: ModelBackend,
    question: str,
    draft_answer: DraftAnswer,
    evidence: Iterable[EvidenceSnippet],
    prompts: PromptSet | None = None,
) -> str:
    """Send the KEEP/REVISE prompt and return the raw completion."""
    prompts = prompts or load_prompts()
    prompt = build_refine_prompt(prompts, question, draft_answer, evidence)
    try:
        return model.complete(prompt)
    except (ModelUnavailableError, PayloadError) as exc:
        raise RefineUnavailableError(str(exc)) from exc


_FIELD = re.compile(r"^\s*(\**)\s*(decision|answer|evidence)\s*(\**)\s*:(.*)$", re.IGNORECASE)


def parse_verdict(raw: str | bytes) -> RefinerVerdict:
    """Parse the three-line refiner reply. Never raises.

    Any missing, duplicated or unknown field value yields a malformed verdict
    whose decision is KEEP, so callers fall back to the draft.
    """
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8", errors="replace")
    if not isinstance(raw, str):
        return MALFORMED
    fields: dict[str, str] = {}
    for line in raw.splitlines():
        m = _FIELD.match(line)
        if not m:
            continue
        opened, name, closed, value = m.groups()
        name = name.lower()
        if name in fields:
            return MALFORMED
        value = value.strip()
        if opened and not closed and value.startswith(opened):
            # markdown bold closed after the colon: "**ANSWER:** Paris"
            value = value[len(opened):].strip()
        fields[name] = value
    if len(fields) != 3:
        return MALFORMED
    token = fields["decision"].strip("*.").strip().upper()
    if token not in ("KEEP", "REVISE"):
        return MALFORMED
    answer = fields["answer"]
    if not answer:
        return MALFORMED
    evidence: str | None = fields["evidence"]
    if not evidence or evidence.upper() == "NONE":
        evidence = None
    return RefinerVerdict(Decision(token), answer, evidence, ParseStatus.OK)


def render_verdict(decision: Decision | str, answer: str, evidence: str | None) -> str:
    """Inverse of parse_verdict for well-formed triples."""
    decision = Decision(decision).value
    return f"DECISION: {decision}\nANSWER: {answer}\nEVIDENCE: {evidence if evidence else 'NONE'}"
