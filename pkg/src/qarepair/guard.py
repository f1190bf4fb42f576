"""Deterministic validation of proposed revisions and answer canonicalization.

A revision must clear six rules, checked in order, before it may replace the
draft. The first failing rule is recorded. Passing is a necessary lexical
condition, not evidence that the revision is right.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Any

from .model_io import Decision, DraftAnswer, RefinerVerdict
from .qtype import QuestionType
from .textnorm import is_non_answer, months, normalize, stopwords, strip_punct


class RejectRule(str, enum.Enum):
    R1_DEGENERATE = "r1_degenerate"
    R2_YESNO_FORM = "r2_yesno_form"
    R3_ENTITY_SHAPE = "r3_entity_shape"
    R4_MISSING_MARKER = "r4_missing_marker"
    R5_NO_EVIDENCE = "r5_no_evidence"
    R6_UNGROUNDED = "r6_ungrounded"


@dataclass(frozen=True)
class ValidationOutcome:
    accepted: bool
    rejected_rule: RejectRule | None = None
    canonical_answer: str | None = None
    # contiguous | near_contiguous | partial, for accepted grounded revisions
    grounding: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "accepted": self.accepted,
            "rejected_rule": self.rejected_rule.value if self.rejected_rule else None,
            "canonical_answer": self.canonical_answer,
            "grounding": self.grounding,
        }


ENTITY_TYPES = frozenset({QuestionType.PERSON, QuestionType.LOCATION, QuestionType.OTHER})
MARKER_TYPES = frozenset({QuestionType.TEMPORAL, QuestionType.YEAR, QuestionType.NUMERIC})

MAX_ENTITY_TOKENS = 8
CLAUSE_WORDS = frozenset({"who", "which", "that", "because", "when"})
COPULAR_PREFIXES = ("the answer is", "it is", "he is", "she is")
ARTICLES = frozenset({"a", "an", "the"})
NON_RESPONSIVE_PREFIXES = (
    "i cannot", "i cant", "i dont", "i do not", "i am not", "im not", "sorry",
    "unable to", "no information", "the evidence does not", "the evidence doesnt",
    "it is unclear", "cannot",
)
_DIGIT = re.compile(r"[0-9]")


def _has_digit(tok: str) -> bool:
    return _DIGIT.search(tok.replace(",", "")) is not None


def _marker_tokens(toks: list[str]) -> list[str]:
    mset = months()
    return [t for t in toks if _has_digit(t) or t in mset]


def _is_non_responsive(answer: str) -> bool:
    if is_non_answer(answer):
        return True
    norm = normalize(answer)
    return any(norm == p or norm.startswith(p + " ") for p in NON_RESPONSIVE_PREFIXES)


def _entity_shape_bad(answer: str) -> bool:
    toks = normalize(answer).split()
    if len(toks) > MAX_ENTITY_TOKENS:
        return True
    if any(t in CLAUSE_WORDS for t in toks[1:-1]):
        return True
    lowered = " ".join(toks)
    if any(lowered == p or lowered.startswith(p + " ") for p in COPULAR_PREFIXES):
        return True
    raw = [strip_punct(t) for t in answer.split()]
    raw = [t for t in raw if t]
    if len(raw) >= 2 and raw[0].lower() in ARTICLES:
        nxt = raw[1]
        # A lowercase word after the article reads as a common noun ("the city of ...").
        if nxt[0].isalpha() and nxt[0].islower():
            return True
    return False


def overlap_strength(answer_toks: list[str], evidence_toks: list[str]) -> str | None:
    """How an answer's tokens sit in the evidence: contiguous, near_contiguous, partial or None."""
    if not answer_toks:
        return None
    ev_set = set(evidence_toks)
    if not any(t in ev_set for t in answer_toks):
        return None
    n = len(answer_toks)
    for i in range(len(evidence_toks) - n + 1):
        if evidence_toks[i : i + n] == answer_toks:
            return "contiguous"
    need = set(answer_toks)
    window = n + 2
    for i in range(max(1, len(evidence_toks) - window + 1)):
        if need <= set(evidence_toks[i : i + window]):
            return "near_contiguous"
    return "partial"


def grounding_check(qt: QuestionType, answer: str, evidence: str) -> str | None:
    """Rule 6. Returns the overlap strength when grounded, None when not."""
    ans_toks = normalize(answer).split()
    ev_toks = normalize(evidence).split()
    ev_set = set(ev_toks)
    if qt in MARKER_TYPES:
        markers = _marker_tokens(ans_toks)
        hits = [t for t in markers if t in ev_set]
        if not hits:
            return None
        return overlap_strength(ans_toks, ev_toks) or "partial"
    stop = stopwords()
    content = [t for t in ans_toks if t not in stop]
    if not any(t in ev_set for t in content):
        return None
    return overlap_strength(content, ev_toks) or "partial"


def validate(
    question: str, qt: QuestionType, draft: DraftAnswer, verdict: RefinerVerdict
) -> ValidationOutcome:
    """Check a parsed REVISE proposal against rules r1..r6 and canonicalize it on success."""
    if not verdict.is_ok or verdict.decision is not Decision.REVISE:
        raise ValueError("validate() only accepts well-formed REVISE verdicts")
    answer = verdict.answer.strip()

    def reject(rule: RejectRule) -> ValidationOutcome:
        return ValidationOutcome(False, rule)

    norm = normalize(answer)
    if not norm or _is_non_responsive(answer) or norm == normalize(draft.text):
        return reject(RejectRule.R1_DEGENERATE)
    if qt is QuestionType.YESNO and norm not in ("yes", "no"):
        return reject(RejectRule.R2_YESNO_FORM)
    if qt in ENTITY_TYPES and _entity_shape_bad(answer):
        return reject(RejectRule.R3_ENTITY_SHAPE)
    if qt in MARKER_TYPES and not _marker_tokens(norm.split()):
        return reject(RejectRule.R4_MISSING_MARKER)
    if not verdict.evidence or not verdict.evidence.strip():
        return reject(RejectRule.R5_NO_EVIDENCE)
    strength = None
    if qt is not QuestionType.YESNO:
        strength = grounding_check(qt, answer, verdict.evidence)
        if strength is None:
            return reject(RejectRule.R6_UNGROUNDED)
    return ValidationOutcome(True, None, canonicalize(qt, answer), strength)


_YEAR = re.compile(r"(?<!\w)([0-9]{4})(?!\w)")
_PAREN = re.compile(r"\s*\([^()]*\)")
_LOC_PREP = re.compile(r"^(?:in|at|on|near|from|within|inside|to)\s+", re.IGNORECASE)
_TIME_PREP = re.compile(r"^(?:in|on)\s+", re.IGNORECASE)
MAGNITUDE_WORDS = frozenset({"thousand", "million", "billion"})
_EDGE = "()[]{}.,;:!?\"'"


def _strip_repeated(pattern: re.Pattern[str], text: str) -> str:
    while True:
        new = pattern.sub("", text, count=1)
        if new == text:
            return text
        text = new


def _compact_number(answer: str) -> str:
    # Parenthetical asides ("15,632 (2010 census)") are dropped unless they hold the only number.
    bare = _strip_repeated(_PAREN, answer)
    if _DIGIT.search(bare):
        answer = bare
    toks = answer.split()
    best: tuple[int, int] | None = None
    i = 0
    while i < len(toks):
        j = i
        has_digit = False
        while j < len(toks):
            t = toks[j]
            if _has_digit(t):
                has_digit = True
            elif strip_punct(t).lower() not in MAGNITUDE_WORDS:
                break
            j += 1
        if j > i and has_digit and (best is None or j - i > best[1] - best[0]):
            best = (i, j)
        i = max(j, i + 1)
    if best is None:
        return answer
    return " ".join(toks[best[0] : best[1]]).strip(_EDGE).strip()


def canonicalize(qt: QuestionType, answer: str) -> str:
    """Type-specific cleanup of an accepted answer. Never returns an empty string
    for non-empty input: if a rule would empty it, the trimmed original is kept."""
    original = answer.strip()
    if qt is QuestionType.YEAR:
        m = _YEAR.search(original)
        out = m.group(1) if m else original
    elif qt is QuestionType.NUMERIC:
        out = _compact_number(original)
    elif qt is QuestionType.LOCATION:
        out = _strip_repeated(_LOC_PREP, original)
    elif qt is QuestionType.TEMPORAL:
        out = _strip_repeated(_TIME_PREP, original)
    elif qt is QuestionType.PERSON:
        out = " ".join(_strip_repeated(_PAREN, original).split())
    elif qt is QuestionType.YESNO:
        norm = normalize(original)
        out = norm if norm in ("yes", "no") else original
    else:
        out = original
    out = out.strip()
    return out or original
