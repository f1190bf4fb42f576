"""Answer scoring and paired intervention-profile reports."""

from __future__ import annotations

import csv
import enum
import json
import logging
import re
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from string import Template
from typing import Any, Iterable, Mapping, Protocol, Sequence

from .errors import GradingUnavailableError, InvalidInputError, ModelUnavailableError, PayloadError
from .models import ModelBackend
from .textnorm import normalize, squad_normalize

logger = logging.getLogger(__name__)

Gold = str | Sequence[str]


class GradeLabel(str, enum.Enum):
    CORRECT = "correct"
    INCORRECT = "incorrect"
    NOT_ATTEMPTED = "not_attempted"


def _golds(gold: Gold) -> list[str]:
    golds = [gold] if isinstance(gold, str) else list(gold)
    if not golds:
        raise InvalidInputError("gold must be non-empty")
    return golds


def exact_match(pred: str, gold: Gold) -> int:
    p = squad_normalize(pred or "")
    return int(any(p == squad_normalize(g) for g in _golds(gold)))


def _f1(pred_toks: list[str], gold_toks: list[str]) -> float:
    if not pred_toks and not gold_toks:
        return 1.0
    if not pred_toks or not gold_toks:
        return 0.0
    common = sum((Counter(pred_toks) & Counter(gold_toks)).values())
    if common == 0:
        return 0.0
    precision = common / len(pred_toks)
    recall = common / len(gold_toks)
    return 2 * precision * recall / (precision + recall)


def token_f1(pred: str, gold: Gold) -> float:
    p = squad_normalize(pred or "").split()
    return max(_f1(p, squad_normalize(g).split()) for g in _golds(gold))


class Grader(Protocol):
    def grade(self, question: str, pred: str, gold: Gold) -> GradeLabel: ...


class DefaultGrader:
    """Empty prediction is not attempted; otherwise exact match decides."""

    def grade(self, question: str, pred: str | None, gold: Gold) -> GradeLabel:
        if not pred or not pred.strip():
            return GradeLabel.NOT_ATTEMPTED
        return GradeLabel.CORRECT if exact_match(pred, gold) else GradeLabel.INCORRECT


EXTERNAL_GRADER_PROMPT = Template(
    """Grade a predicted answer to a factual question against the gold target.
Question: ${question}
Gold target: ${gold}
Predicted answer: ${pred}
Reply with a single letter: A if the prediction is CORRECT, B if it is INCORRECT, C if it is NOT_ATTEMPTED."""
)
_LETTER = re.compile(r"\b([ABC])\b")
_LETTER_LABELS = {"A": GradeLabel.CORRECT, "B": GradeLabel.INCORRECT, "C": GradeLabel.NOT_ATTEMPTED}


class ModelGrader:
    """Forwards (question, prediction, gold) to a model backend and maps its A/B/C letter."""

    def __init__(self, model: ModelBackend, template: Template = EXTERNAL_GRADER_PROMPT):
        self.model = model
        self.template = template

    def grade(self, question: str, pred: str | None, gold: Gold) -> GradeLabel:
        golds = _golds(gold)
        prompt = self.template.safe_substitute(question=question, gold=" | ".join(golds), pred=pred or "")
        try:
            reply = self.model.complete(prompt)
        except (ModelUnavailableError, PayloadError) as exc:
            raise GradingUnavailableError(str(exc)) from exc
        m = _LETTER.search(reply.strip().upper())
        if not m:
            raise GradingUnavailableError(f"grader reply has no A/B/C letter: {reply[:80]!r}")
        return _LETTER_LABELS[m.group(1)]


def grade(grader: Grader, question: str, pred: str | None, gold: Gold) -> GradeLabel:
    return grader.grade(question, pred or "", gold)


TRANSITIONS = ("stay_correct", "stay_wrong", "corrected", "harmed")


def transition(before: GradeLabel, after: GradeLabel) -> str:
    b = before is GradeLabel.CORRECT
    a = after is GradeLabel.CORRECT
    if b and a:
        return "stay_correct"
    if b:
        return "harmed"
    if a:
        return "corrected"
    return "stay_wrong"


@dataclass
class EvalReport:
    n: int
    attempted: int
    correct_rate: float
    f1: float
    em: float | None
    token_f1: float | None
    baseline_correct_rate: float
    baseline_f1: float
    baseline_em: float | None
    baseline_token_f1: float | None
    revise_rate: float
    stay_correct: float
    stay_wrong: float
    corrected: float
    harmed: float
    helped_count: int
    hurt_count: int
    format_failures: int
    validator_rejections: int
    not_attempted_rate: float
    grading_failures: int = 0

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _by_id(traces: Iterable[Mapping[str, Any]]) -> dict[str, Mapping[str, Any]]:
    out: dict[str, Mapping[str, Any]] = {}
    for t in traces:
        out[str(t["question_id"])] = t
    return out


def check_same_ids(baseline: Mapping[str, Any], refined: Mapping[str, Any]) -> None:
    diff = sorted(set(baseline) ^ set(refined))
    if diff:
        raise InvalidInputError(f"baseline and refined traces cover different ids: {', '.join(diff)}")


def _final(trace: Mapping[str, Any]) -> str:
    return trace.get("final_answer") or ""


def _is_attempted(trace: Mapping[str, Any]) -> bool:
    return trace.get("status", "ok") == "ok" and bool(_final(trace))


def grade_pairs(
    baseline_traces: Iterable[Mapping[str, Any]],
    refined_traces: Iterable[Mapping[str, Any]],
    gold: Mapping[str, Gold],
    grader: Grader | None = None,
) -> dict[str, tuple[GradeLabel | None, GradeLabel | None]]:
    """Grade both sides of each paired trace; a failed external grading is recorded as None."""
    grader = grader or DefaultGrader()
    base, ref = _by_id(baseline_traces), _by_id(refined_traces)
    check_same_ids(base, ref)
    out = {}
    for qid in base:
        if qid not in gold:
            raise InvalidInputError(f"no gold answer for question {qid}")
        labels = []
        for trace in (base[qid], ref[qid]):
            try:
                labels.append(grade(grader, trace.get("question", ""), _final(trace), gold[qid]))
            except GradingUnavailableError as exc:
                logger.warning("grading unavailable for %s: %s", qid, exc)
                labels.append(None)
        out[qid] = (labels[0], labels[1])
    return out


def _simpleqa_f1(labels: list[GradeLabel]) -> tuple[float, float]:
    n = len(labels)
    correct = sum(lab is GradeLabel.CORRECT for lab in labels)
    attempted = sum(lab is not GradeLabel.NOT_ATTEMPTED for lab in labels)
    rate = correct / n if n else 0.0
    given = correct / attempted if attempted else 0.0
    f1 = 2 * rate * given / (rate + given) if rate + given else 0.0
    return rate, f1


def _changed(baseline: Mapping[str, Any], refined: Mapping[str, Any]) -> bool:
    return normalize(_final(refined)) != normalize(_final(baseline))


def intervention_profile(
    baseline_traces: Iterable[Mapping[str, Any]],
    refined_traces: Iterable[Mapping[str, Any]],
    grades: Mapping[str, tuple[GradeLabel | None, GradeLabel | None]],
    gold: Mapping[str, Gold] | None = None,
) -> EvalReport:
    """Paired outcome accounting between a baseline run and a refined run.

    Transition fractions are over pairs where both sides were attempted and
    graded, so the four always sum to one. Correct rates count not-attempted
    items in the denominator.
    """
    base, ref = _by_id(baseline_traces), _by_id(refined_traces)
    check_same_ids(base, ref)
    ids = sorted(base)
    if not ids:
        raise InvalidInputError("no traces to compare")
    missing = [i for i in ids if i not in grades]
    if missing:
        raise InvalidInputError(f"missing grades for: {', '.join(missing)}")

    counts = Counter()
    grading_failures = 0
    base_labels: list[GradeLabel] = []
    ref_labels: list[GradeLabel] = []
    for qid in ids:
        b_lab, r_lab = grades[qid]
        if b_lab is None or r_lab is None:
            grading_failures += 1
        base_labels.append(b_lab or GradeLabel.INCORRECT)
        ref_labels.append(r_lab or GradeLabel.INCORRECT)
        if b_lab is None or r_lab is None:
            continue
        if _is_attempted(base[qid]) and _is_attempted(ref[qid]):
            counts[transition(b_lab, r_lab)] += 1
    attempted_pairs = sum(counts.values())

    def frac(key: str) -> float:
        return counts[key] / attempted_pairs if attempted_pairs else 0.0

    attempted_ref = [ref[i] for i in ids if _is_attempted(ref[i])]
    # a revision is a refined answer that differs from the paired baseline answer
    revised = sum(_changed(base[i], ref[i]) for i in ids if _is_attempted(ref[i]))
    format_failures = sum(bool(ref[i].get("format_failure")) for i in ids)
    rejections = sum(
        1
        for i in ids
        if isinstance(ref[i].get("validation"), Mapping) and not ref[i]["validation"].get("accepted")
    )
    not_attempted = sum(not _is_attempted(ref[i]) for i in ids)

    def scores(side: Mapping[str, Mapping[str, Any]]) -> tuple[float | None, float | None]:
        if gold is None:
            return None, None
        em = sum(exact_match(_final(side[i]), gold[i]) for i in ids) / len(ids)
        f1 = sum(token_f1(_final(side[i]), gold[i]) for i in ids) / len(ids)
        return em, f1

    r_rate, r_f1 = _simpleqa_f1(ref_labels)
    b_rate, b_f1 = _simpleqa_f1(base_labels)
    r_em, r_tf1 = scores(ref)
    b_em, b_tf1 = scores(base)
    return EvalReport(
        n=len(ids),
        attempted=attempted_pairs,
        correct_rate=r_rate,
        f1=r_f1,
        em=r_em,
        token_f1=r_tf1,
        baseline_correct_rate=b_rate,
        baseline_f1=b_f1,
        baseline_em=b_em,
        baseline_token_f1=b_tf1,
        revise_rate=revised / len(attempted_ref) if attempted_ref else 0.0,
        stay_correct=frac("stay_correct"),
        stay_wrong=frac("stay_wrong"),
        corrected=frac("corrected"),
        harmed=frac("harmed"),
        helped_count=counts["corrected"],
        hurt_count=counts["harmed"],
        format_failures=format_failures,
        validator_rejections=rejections,
        not_attempted_rate=not_attempted / len(ids),
        grading_failures=grading_failures,
    )


def transition_rows(
    baseline_traces: Iterable[Mapping[str, Any]],
    refined_traces: Iterable[Mapping[str, Any]],
    grades: Mapping[str, tuple[GradeLabel | None, GradeLabel | None]],
) -> list[dict[str, Any]]:
    base, ref = _by_id(baseline_traces), _by_id(refined_traces)
    check_same_ids(base, ref)
    rows = []
    for qid in sorted(base):
        b_lab, r_lab = grades[qid]
        attempted = _is_attempted(base[qid]) and _is_attempted(ref[qid])
        rows.append(
            {
                "question_id": qid,
                "baseline_final": _final(base[qid]),
                "refined_final": _final(ref[qid]),
                "baseline_label": b_lab.value if b_lab else "",
                "refined_label": r_lab.value if r_lab else "",
                "transition": transition(b_lab, r_lab) if (attempted and b_lab and r_lab) else "",
                "revised": _changed(base[qid], ref[qid]),
            }
        )
    return rows


def write_report(report: EvalReport, rows: list[dict[str, Any]], json_path: Path, csv_path: Path) -> None:
    json_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    fields = ["question_id", "baseline_final", "refined_final", "baseline_label", "refined_label", "transition", "revised"]
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def format_transition_table(report: EvalReport) -> str:
    lines = [
        f"{'transition':<14}{'fraction':>10}",
        f"{'stay_correct':<14}{report.stay_correct:>10.4f}",
        f"{'stay_wrong':<14}{report.stay_wrong:>10.4f}",
        f"{'corrected':<14}{report.corrected:>10.4f}",
        f"{'harmed':<14}{report.harmed:>10.4f}",
        "",
        f"n={report.n} attempted_pairs={report.attempted} helped={report.helped_count} hurt={report.hurt_count}",
        f"revise_rate={report.revise_rate:.4f} format_failures={report.format_failures} "
        f"not_attempted_rate={report.not_attempted_rate:.4f}",
        f"correct_rate {report.baseline_correct_rate:.4f} -> {report.correct_rate:.4f}",
    ]
    return "\n".join(lines)
