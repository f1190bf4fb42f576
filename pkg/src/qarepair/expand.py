"""Answer-conditioned second-pass query construction."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidInputError
from .model_io import DraftAnswer
from .qtype import QuestionType, is_slot_type
from .textnorm import normalize


@dataclass(frozen=True)
class ExpansionPlan:
    queries: tuple[str, ...]
    slot_query_included: bool


def join_query(question: str, answer: str) -> str:
    """The question followed by the quoted candidate answer."""
    return f'{question} "{answer}"'


def build_queries(question: str, draft: DraftAnswer, qt: QuestionType) -> ExpansionPlan:
    """Second-pass queries: the question, question plus quoted draft, and for
    slot-like types the bare draft. Queries that normalize identically collapse."""
    question = question.strip()
    answer = draft.text.strip() if draft is not None else ""
    if not question:
        raise InvalidInputError("question must be non-empty")
    if not answer:
        raise InvalidInputError("draft answer must be non-empty")

    candidates = [question, join_query(question, answer)]
    if is_slot_type(qt):
        candidates.append(answer)
    queries: list[str] = []
    seen: set[str] = set()
    for q in candidates:
        key = normalize(q) or q
        if key not in seen:
            seen.add(key)
            queries.append(q)
    return ExpansionPlan(tuple(queries), slot_query_included=len(queries) == 3)
