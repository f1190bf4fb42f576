"""Per-question orchestration and resumable corpus runs."""

from __future__ import annotations

import enum
import json
import logging
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

from .errors import (
    DraftUnavailableError,
    InvalidInputError,
    PayloadError,
    RefineUnavailableError,
    RetrievalUnavailableError,
)
from .evidence import FIRST_PASS, SECOND_PASS, EvidenceSet, RetrievalBackend, merge_dedupe, retrieve
from .expand import build_queries
from .guard import ValidationOutcome, canonicalize, validate
from .model_io import (
    Decision,
    PromptSet,
    RefinerVerdict,
    draft as make_draft,
    load_prompts,
    parse_verdict,
    refine_call,
)
from .models import ModelBackend
from .qtype import QuestionType, classify
from .textnorm import resource_hashes

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "v1"
DEFAULT_K_B = 5
DEFAULT_K_R = 5


class PipelineMode(str, enum.Enum):
    BASELINE_ONLY = "baseline_only"
    FULL = "full"
    SECOND_PASS_ORIGINAL_ONLY = "second_pass_original_only"
    NO_VALIDATOR = "no_validator"
    NO_CANONICALIZATION = "no_canonicalization"
    SIMPLE_RECONSIDERATION = "simple_reconsideration"


ABLATION_MODES = (
    PipelineMode.FULL,
    PipelineMode.SECOND_PASS_ORIGINAL_ONLY,
    PipelineMode.NO_VALIDATOR,
    PipelineMode.NO_CANONICALIZATION,
    PipelineMode.SIMPLE_RECONSIDERATION,
)


@dataclass(frozen=True)
class QuestionRecord:
    id: str
    question: str
    gold: str | list[str] | None = None

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "QuestionRecord":
        if "id" not in data or "question" not in data:
            raise InvalidInputError("question record needs 'id' and 'question'")
        gold = data.get("gold")
        if gold is not None and not isinstance(gold, (str, list)):
            raise InvalidInputError(f"record {data['id']}: gold must be a string, list or null")
        return cls(str(data["id"]), str(data["question"]), gold)


def load_questions(path: str | Path) -> list[QuestionRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(QuestionRecord.from_dict(json.loads(line)))
            except ValueError as exc:
                raise InvalidInputError(f"{path}:{lineno}: {exc}") from exc
    return out


@dataclass
class Backends:
    retriever: RetrievalBackend
    model: ModelBackend
    prompts: PromptSet = field(default_factory=load_prompts)


def _verdict_dict(verdict: RefinerVerdict | None) -> dict[str, Any] | None:
    return verdict.to_dict() if verdict is not None else None


def run_question(
    q: QuestionRecord,
    backends: Backends,
    mode: PipelineMode | str = PipelineMode.FULL,
    k_b: int = DEFAULT_K_B,
    k_r: int = DEFAULT_K_R,
    clock: Callable[[], float] = time.perf_counter,
    config_hash: str | None = None,
) -> dict[str, Any]:
    """Run one question through the pipeline and return its trace record."""
    mode = PipelineMode(mode)
    if k_b < 1 or k_r < 1:
        raise InvalidInputError("k_b and k_r must be >= 1")
    started = clock()
    errors: list[str] = []
    counters = {"retrieval_queries": 0, "raw_snippets": 0, "model_calls": 0}
    qt = classify(q.question)
    trace: dict[str, Any] = {
        "schema": SCHEMA_VERSION,
        "question_id": q.id,
        "question": q.question,
        "gold": q.gold,
        "qtype": qt.value,
        "mode": mode.value,
        "status": "ok",
        "r0_snippets": [],
        "draft": None,
        "expansion_queries": [],
        "r1_snippets": [],
        "refiner_raw": None,
        "verdict": None,
        "validation": None,
        "final_answer": None,
        "format_failure": False,
        "counters": counters,
        "errors": errors,
        "prompt_hash": backends.prompts.sha256,
        "resource_hashes": resource_hashes(),
        "config_hash": config_hash,
        "timing_ms": None,
    }

    def finish() -> dict[str, Any]:
        trace["timing_ms"] = round((clock() - started) * 1000.0, 3)
        return trace

    # Stage 1: retrieve and draft.
    counters["retrieval_queries"] += 1
    try:
        hits = retrieve(backends.retriever, q.question, k_b, FIRST_PASS)
    except (RetrievalUnavailableError, PayloadError) as exc:
        errors.append(f"first_pass_retrieval: {exc}")
        hits = []
    counters["raw_snippets"] += len(hits)
    r0 = EvidenceSet(hits)
    trace["r0_snippets"] = r0.to_list()

    counters["model_calls"] += 1
    try:
        draft_answer = make_draft(backends.model, q.question, r0, qt, backends.prompts)
    except DraftUnavailableError as exc:
        errors.append(f"draft: {exc}")
        trace["status"] = "not_attempted"
        return finish()
    trace["draft"] = draft_answer.to_dict()
    trace["final_answer"] = draft_answer.text
    if mode is PipelineMode.BASELINE_ONLY:
        return finish()

    # Stage 2: answer-conditioned second pass.
    if mode is PipelineMode.SIMPLE_RECONSIDERATION:
        queries: tuple[str, ...] = ()
    elif mode is PipelineMode.SECOND_PASS_ORIGINAL_ONLY:
        queries = (q.question.strip(),)
    else:
        queries = build_queries(q.question, draft_answer, qt).queries
    trace["expansion_queries"] = list(queries)
    extra = []
    for query in queries:
        counters["retrieval_queries"] += 1
        try:
            got = retrieve(backends.retriever, query, k_r, SECOND_PASS)
        except (RetrievalUnavailableError, PayloadError) as exc:
            errors.append(f"second_pass_retrieval: {exc}")
            continue
        counters["raw_snippets"] += len(got)
        extra.extend(got)
    r1 = merge_dedupe(r0, extra)
    trace["r1_snippets"] = r1.to_list()

    # Stage 3: guarded KEEP/REVISE.
    counters["model_calls"] += 1
    try:
        raw = refine_call(backends.model, q.question, draft_answer, r1, backends.prompts)
    except RefineUnavailableError as exc:
        errors.append(f"refine: {exc}")
        trace["format_failure"] = True
        return finish()
    if isinstance(raw, (bytes, bytearray)):
        raw = bytes(raw).decode("utf-8", errors="replace")
    trace["refiner_raw"] = raw
    verdict = parse_verdict(raw)
    trace["verdict"] = _verdict_dict(verdict)
    if not verdict.is_ok:
        trace["format_failure"] = True
        return finish()
    if verdict.decision is Decision.KEEP:
        return finish()

    if mode is PipelineMode.NO_VALIDATOR:
        outcome = ValidationOutcome(True, None, canonicalize(qt, verdict.answer))
    else:
        outcome = validate(q.question, qt, draft_answer, verdict)
    trace["validation"] = outcome.to_dict()
    if outcome.accepted:
        if mode is PipelineMode.NO_CANONICALIZATION:
            trace["final_answer"] = verdict.answer.strip()
        else:
            trace["final_answer"] = outcome.canonical_answer
    return finish()


def _error_trace(q: QuestionRecord, mode: PipelineMode, exc: BaseException) -> dict[str, Any]:
    return {
        "schema": SCHEMA_VERSION,
        "question_id": q.id,
        "question": q.question,
        "gold": q.gold,
        "mode": mode.value,
        "status": "error",
        "final_answer": None,
        "errors": [f"{type(exc).__name__}: {exc}"],
    }


def _dump(trace: Mapping[str, Any]) -> str:
    return json.dumps(trace, ensure_ascii=False) + "\n"


def checkpoint_path(output_path: str | Path) -> Path:
    p = Path(output_path)
    return p.with_name(p.name + ".done")


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _recover(output: Path, ckpt: Path, order: Mapping[str, int]) -> dict[str, str]:
    """Reconcile output and checkpoint after an interrupted run.

    A trace counts as done only if its id is in the checkpoint and a complete
    line for it exists in the output; everything else is rerun.
    """
    done_ids: set[str] = set()
    if ckpt.exists():
        done_ids = {line.strip() for line in ckpt.read_text(encoding="utf-8").splitlines() if line.strip()}
    kept: dict[str, str] = {}
    if output.exists():
        for line in output.read_text(encoding="utf-8").splitlines():
            try:
                rec = json.loads(line)
            except ValueError:
                continue
            qid = rec.get("question_id") if isinstance(rec, dict) else None
            if qid in done_ids and qid in order and qid not in kept:
                kept[qid] = line + "\n"
    ordered = sorted(kept, key=order.__getitem__)
    _atomic_write(output, "".join(kept[i] for i in ordered))
    _atomic_write(ckpt, "".join(f"{i}\n" for i in ordered))
    return kept


def run_corpus(
    questions: Iterable[QuestionRecord],
    backends: Backends,
    output_path: str | Path,
    mode: PipelineMode | str = PipelineMode.FULL,
    concurrency: int = 1,
    k_b: int = DEFAULT_K_B,
    k_r: int = DEFAULT_K_R,
    clock: Callable[[], float] = time.perf_counter,
    config_hash: str | None = None,
    progress: Callable[[int, int], None] | None = None,
) -> Path:
    """Run every question and write one JSONL trace line each, in input order.

    Completed ids are appended to ``<output>.done`` so that a rerun after an
    interruption skips them. Per-question failures become ``status: error``
    traces instead of aborting the run.
    """
    questions = list(questions)
    mode = PipelineMode(mode)
    if not questions:
        raise InvalidInputError("no questions to run")
    if concurrency < 1:
        raise InvalidInputError("concurrency must be >= 1")
    order: dict[str, int] = {}
    for idx, q in enumerate(questions):
        if q.id in order:
            raise InvalidInputError(f"duplicate question id {q.id!r}")
        order[q.id] = idx

    output = Path(output_path)
    ckpt = checkpoint_path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    done = _recover(output, ckpt, order) if (output.exists() or ckpt.exists()) else {}
    resumed = bool(done)
    # Fail fast on an unwritable destination before any work is done.
    out_fh = open(output, "a", encoding="utf-8")
    ck_fh = open(ckpt, "a", encoding="utf-8")

    pending = [q for q in questions if q.id not in done]
    total = len(questions)
    completed = len(done)
    if resumed:
        logger.info("resuming: %d of %d questions already done", completed, total)

    def work(q: QuestionRecord) -> dict[str, Any]:
        try:
            return run_question(q, backends, mode, k_b, k_r, clock, config_hash)
        except Exception as exc:
            logger.exception("question %s failed", q.id)
            return _error_trace(q, mode, exc)

    def emit(trace: Mapping[str, Any]) -> None:
        nonlocal completed
        out_fh.write(_dump(trace))
        out_fh.flush()
        ck_fh.write(f"{trace['question_id']}\n")
        ck_fh.flush()
        completed += 1
        if progress is not None:
            progress(completed, total)

    try:
        if concurrency == 1:
            for q in pending:
                emit(work(q))
        else:
            buffered: dict[int, dict[str, Any]] = {}
            next_slot = 0
            with ThreadPoolExecutor(max_workers=concurrency) as pool:
                futures = {pool.submit(work, q): i for i, q in enumerate(pending)}
                for fut in as_completed(futures):
                    buffered[futures[fut]] = fut.result()
                    while next_slot in buffered:
                        emit(buffered.pop(next_slot))
                        next_slot += 1
    finally:
        out_fh.close()
        ck_fh.close()

    if resumed:
        _recover(output, ckpt, order)
    return output


def read_traces(path: str | Path) -> list[dict[str, Any]]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
