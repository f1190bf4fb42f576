import pytest
from hypothesis import given
from hypothesis import strategies as st

from qarepair.errors import InvalidInputError
from qarepair.expand import build_queries
from qarepair.model_io import DraftAnswer
from qarepair.qtype import QuestionType as QT
from qarepair.qtype import is_slot_type

from conftest import JERLOV_Q


def test_jerlov_queries():
    plan = build_queries(JERLOV_Q, DraftAnswer("Collin Roesler"), QT.PERSON)
    assert plan.queries == (JERLOV_Q, JERLOV_Q + ' "Collin Roesler"', "Collin Roesler")
    assert plan.slot_query_included


def test_non_slot_type_gets_two_queries():
    plan = build_queries("Describe the treaty.", DraftAnswer("Treaty of Ghent"), QT.OTHER)
    assert plan.queries == ("Describe the treaty.", 'Describe the treaty. "Treaty of Ghent"')
    assert not plan.slot_query_included


def test_answer_equal_to_question_collapses():
    q = "Who is Who?"
    plan = build_queries(q, DraftAnswer("who is who"), QT.PERSON)
    assert len(plan.queries) == 2 == len(set(plan.queries))
    assert not plan.slot_query_included


def test_empty_question_rejected():
    with pytest.raises(InvalidInputError):
        build_queries("  ", DraftAnswer("x"), QT.OTHER)


def test_empty_draft_rejected():
    with pytest.raises(InvalidInputError):
        DraftAnswer("   ")
    with pytest.raises(InvalidInputError):
        build_queries("q?", None, QT.OTHER)


words = st.text(alphabet="abcdefgh XYZ019", min_size=1, max_size=20).filter(lambda s: s.strip())


@given(words, words, st.sampled_from(list(QT)))
def test_query_count_law(question, answer, qt):
    plan = build_queries(question, DraftAnswer(answer), qt)
    assert plan.queries[0] == question.strip()
    assert 2 <= len(plan.queries) <= 3
    assert plan.slot_query_included == (len(plan.queries) == 3)
    if len(plan.queries) == 3:
        assert is_slot_type(qt) and plan.queries[2] == answer.strip()
    # with the shared first-pass query, 3 or 4 retrievals per question
    assert 1 + len(plan.queries) in (3, 4)


@given(st.sampled_from(list(QT)))
def test_slot_types_get_bare_query(qt):
    plan = build_queries("Which one is it?", DraftAnswer("Zanzibar"), qt)
    assert (len(plan.queries) == 3) == is_slot_type(qt)
