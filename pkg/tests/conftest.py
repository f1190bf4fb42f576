from __future__ import annotations

import sys
from pathlib import Path

import pytest

from qarepair.fixtures import fixture_path
from qarepair.models import ScriptedModel
from qarepair.pipeline import Backends, QuestionRecord, load_questions
from qarepair.retrievers import ScriptedRetriever

sys.path.insert(0, str(Path(__file__).parent))

JERLOV_Q = "Who was awarded the Oceanography Society's Jerlov Award in 2018?"


@pytest.fixture
def jerlov_backends() -> Backends:
    return Backends(
        ScriptedRetriever.from_file(fixture_path("jerlov", "retrieval.json")),
        ScriptedModel.from_file(fixture_path("jerlov", "model.json")),
    )


@pytest.fixture
def jerlov_record() -> QuestionRecord:
    return load_questions(fixture_path("jerlov", "questions.jsonl"))[0]


@pytest.fixture
def frozen_clock():
    return lambda: 0.0
