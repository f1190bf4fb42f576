"""Answer-conditioned, guarded repair of short-form retrieval QA answers."""

from .evidence import EvidenceSet, EvidenceSnippet, merge_dedupe, retrieve
from .expand import ExpansionPlan, build_queries
from .guard import RejectRule, ValidationOutcome, canonicalize, validate
from .model_io import (
    Decision,
    DraftAnswer,
    DraftOrigin,
    ParseStatus,
    RefinerVerdict,
    draft,
    load_prompts,
    parse_verdict,
    refine_call,
    render_verdict,
)
from .pipeline import Backends, PipelineMode, QuestionRecord, run_corpus, run_question
from .qtype import QuestionType, classify, is_slot_type

__version__ = "0.1.0"

__all__ = [
    "Backends",
    "Decision",
    "DraftAnswer",
    "DraftOrigin",
    "EvidenceSet",
    "EvidenceSnippet",
    "ExpansionPlan",
    "ParseStatus",
    "PipelineMode",
    "QuestionRecord",
    "QuestionType",
    "RefinerVerdict",
    "RejectRule",
    "ValidationOutcome",
    "build_queries",
    "canonicalize",
    "classify",
    "draft",
    "is_slot_type",
    "load_prompts",
    "merge_dedupe",
    "parse_verdict",
    "refine_call",
    "render_verdict",
    "retrieve",
    "run_corpus",
    "run_question",
    "validate",
]
