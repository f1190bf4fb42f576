"""Coarse question typing.

The label routes three later decisions: whether a bare-answer expansion query
is issued, which validation rules apply to a proposed revision, and how an
accepted revision is canonicalized.
"""

from __future__ import annotations

import enum
import re

from .errors import InvalidInputError
from .textnorm import collapse_ws


class QuestionType(str, enum.Enum):
    YESNO = "yesno"
    YEAR = "year"
    TEMPORAL = "temporal"
    NUMERIC = "numeric"
    LOCATION = "location"
    PERSON = "person"
    OTHER = "other"


SLOT_TYPES = frozenset(
    {
        QuestionType.PERSON,
        QuestionType.LOCATION,
        QuestionType.TEMPORAL,
        QuestionType.YEAR,
        QuestionType.NUMERIC,
    }
)

AUXILIARY_VERBS = (
    "is", "are", "was", "were", "do", "does", "did", "can", "could", "will",
    "would", "has", "have", "had", "should", "may", "might", "must",
)
YEAR_CUES = ("what year", "in what year", "which year")
TEMPORAL_CUES = ("what day", "what month", "what date", "day, month, and year", "timeframe")
NUMERIC_CUES = ("how many", "how much", "population", "number")
_PLACE_NOUNS = ("city", "county", "town", "village", "municipality", "neighborhood")
LOCATION_CUES = (
    tuple(f"what {n}" for n in _PLACE_NOUNS)
    + ("which city",)
    + tuple(f"in which {n}" for n in _PLACE_NOUNS)
)


def _starts_with(text: str, words: tuple[str, ...]) -> bool:
    return re.match(r"(?:%s)\b" % "|".join(map(re.escape, words)), text) is not None


def _contains(text: str, cues: tuple[str, ...]) -> bool:
    # Word-bounded so that e.g. "number" does not fire inside "outnumbered".
    return any(re.search(r"\b%s\b" % re.escape(cue), text) for cue in cues)


# Precedence is the order of this table: most specific cue first.
_RULES = (
    (QuestionType.YESNO, lambda t: _starts_with(t, AUXILIARY_VERBS)),
    (QuestionType.YEAR, lambda t: _contains(t, YEAR_CUES)),
    (QuestionType.TEMPORAL, lambda t: _starts_with(t, ("when",)) or _contains(t, TEMPORAL_CUES)),
    (QuestionType.NUMERIC, lambda t: _contains(t, NUMERIC_CUES)),
    (QuestionType.LOCATION, lambda t: _starts_with(t, ("where",)) or _contains(t, LOCATION_CUES)),
    (QuestionType.PERSON, lambda t: _starts_with(t, ("who", "whom", "whose"))),
)


def classify(question: str) -> QuestionType:
    """Return the coarse type of ``question``.

    Matching runs on a lowercased, whitespace-collapsed copy; punctuation is kept.
    Raises InvalidInputError for an empty or whitespace-only question.
    """
    if not isinstance(question, str) or not question.strip():
        raise InvalidInputError("question must be a non-empty string")
    text = collapse_ws(question.lower())
    for label, rule in _RULES:
        if rule(text):
            return label
    return QuestionType.OTHER


def is_slot_type(qt: QuestionType) -> bool:
    """True for the types whose answer fills a slot and earns a bare-answer query."""
    return qt in SLOT_TYPES
