"""Acceptance checks, one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also written to the terminal when output is captured.
"""

import json
import os
import random
import time

import pytest

import synthetic
from conftest import JERLOV_Q
from qarepair.cli import main
from qarepair.evaluation import exact_match, grade_pairs, intervention_profile, token_f1
from qarepair.expand import join_query
from qarepair.fixtures import fixture_path
from qarepair.guard import ENTITY_TYPES, MARKER_TYPES, RejectRule
from qarepair.models import ScriptedModel, ScriptRule
from qarepair.pipeline import Backends, QuestionRecord, load_questions, read_traces, run_corpus, run_question
from qarepair.qtype import QuestionType
from qarepair.retrievers import ScriptedRetriever

from reference_metrics import ref_exact_match, ref_token_f1
from test_evaluation import planted, random_pairs
from test_guard import ACCEPT_CASES, REJECT_CASES
from test_guard import run as run_guard


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail=""):
        with capsys.disabled():
            print(f"\nACCEPTANCE {'PASS' if ok else 'FAIL'}  {name}: {detail}")
        assert ok, f"{name}: {detail}"

    return emit


def _jerlov_backends(refiner=None):
    retriever = ScriptedRetriever.from_file(fixture_path("jerlov", "retrieval.json"))
    if refiner is None:
        return Backends(retriever, ScriptedModel.from_file(fixture_path("jerlov", "model.json")))
    return Backends(retriever, ScriptedModel([ScriptRule("BASELINE ANSWER:", refiner),
                                              ScriptRule("Jerlov Award in 2018", "Collin Roesler")]))


def _synthetic(n):
    questions, retrieval, model = synthetic.build(n)
    backends = Backends(ScriptedRetriever(retrieval["queries"]), ScriptedModel.from_dict(model))
    return [QuestionRecord.from_dict(q) for q in questions], backends


def test_golden_trace(report):
    [record] = load_questions(fixture_path("jerlov", "questions.jsonl"))
    start = time.perf_counter()
    full = run_question(record, _jerlov_backends(), "full")
    base = run_question(record, _jerlov_backends(), "baseline_only")
    elapsed = time.perf_counter() - start
    expected_queries = {JERLOV_Q, join_query(JERLOV_Q, "Collin Roesler"), "Collin Roesler"}
    ok = (
        full["draft"]["text"] == "Collin Roesler"
        and set(full["expansion_queries"]) == expected_queries
        and len(full["expansion_queries"]) == 3
        and full["final_answer"] == "Annick Bricaud"
        and base["final_answer"] == "Collin Roesler"
        and elapsed < 1.0
    )
    report("golden Jerlov trace", ok,
           f"draft={full['draft']['text']!r} final={full['final_answer']!r} "
           f"baseline={base['final_answer']!r} runtime={elapsed:.3f}s")


def _applies(rule, qt):
    if rule is RejectRule.R2_YESNO_FORM:
        return qt is QuestionType.YESNO
    if rule is RejectRule.R3_ENTITY_SHAPE:
        return qt in ENTITY_TYPES
    if rule is RejectRule.R4_MISSING_MARKER:
        return qt in MARKER_TYPES
    if rule is RejectRule.R6_UNGROUNDED:
        return qt is not QuestionType.YESNO
    return True


def test_validator_rule_matrix(report):
    failures = []
    for qt, draft, answer, evidence, rule in REJECT_CASES:
        got = run_guard(qt, draft, answer, evidence).rejected_rule
        if got is not rule:
            failures.append((answer, rule.value, got))
    for qt, draft, answer, evidence, canonical in ACCEPT_CASES:
        out = run_guard(qt, draft, answer, evidence)
        if not out.accepted or out.canonical_answer != canonical:
            failures.append((answer, "accept", out.rejected_rule))
    # lowest-numbered failing rule: each reject case also lacks evidence, so
    # every rule below r5 must still be reported ahead of r5
    order = list(RejectRule)
    for qt, draft, answer, _evidence, rule in REJECT_CASES:
        got = run_guard(qt, draft, answer, None).rejected_rule
        if got is not order[min(order.index(rule), order.index(RejectRule.R5_NO_EVIDENCE))]:
            failures.append((answer, "lowest", got))
    per_rule = {
        r.value: (sum(c[-1] is r for c in REJECT_CASES), sum(_applies(r, c[0]) for c in ACCEPT_CASES))
        for r in RejectRule
    }
    coverage = all(rej >= 2 and acc >= 2 for rej, acc in per_rule.values())
    total = len(REJECT_CASES) + len(ACCEPT_CASES)
    report("validator rule matrix", not failures and coverage and total >= 24,
           f"{total} cases, per-rule (reject, accept)={per_rule}, failures={failures}")


def test_conservatism_fuzz(report):
    rng = random.Random(20181)
    [record] = load_questions(fixture_path("jerlov", "questions.jsonl"))
    errors, violations = 0, 0
    for _ in range(1000):
        raw = bytes(rng.getrandbits(8) for _ in range(rng.randint(0, 120)))
        if rng.random() < 0.3:
            raw = b"DECISION: REVISE\nANSWER: " + raw + b"\nEVIDENCE: " + raw
        try:
            t = run_question(record, _jerlov_backends(raw), "full")
            json.dumps(t)
        except Exception:
            errors += 1
            continue
        accepted = bool(t["validation"] and t["validation"]["accepted"])
        if not accepted and t["final_answer"] != t["draft"]["text"]:
            violations += 1
    report("conservatism fuzz (1,000 byte strings)", errors == 0 and violations == 0,
           f"uncaught={errors} non-accepted changes={violations}")


def test_counter_fidelity(report):
    questions, backends = _synthetic(50)
    bad = []
    for q in questions:
        c = run_question(q, backends, "full")["counters"]
        if c["retrieval_queries"] not in (3, 4) or c["raw_snippets"] > 20 or c["model_calls"] != 2:
            bad.append((q.id, "full", c))
        c = run_question(q, backends, "baseline_only")["counters"]
        if c["retrieval_queries"] != 1 or c["raw_snippets"] > 5 or c["model_calls"] != 1:
            bad.append((q.id, "baseline", c))
    report("counter fidelity (50 questions, k_b=k_r=5)", not bad, f"violations={bad[:3]}")


def test_metric_oracle(report):
    pairs = random_pairs(100, seed=7)
    worst = 0.0
    em_diff = 0
    for pred, gold in pairs:
        em_diff += exact_match(pred, gold) != ref_exact_match(pred, gold)
        worst = max(worst, abs(token_f1(pred, gold) - ref_token_f1(pred, gold)))
    report("metric oracle equivalence (100 pairs)", em_diff == 0 and worst <= 1e-12,
           f"EM mismatches={em_diff} max |dF1|={worst:.3g}")


def test_intervention_profile_arithmetic(report):
    kinds = ["cc"] * 120 + ["ww"] * 61 + ["wc"] * 18 + ["cw"] * 1
    random.Random(5).shuffle(kinds)
    base, ref, gold = planted(kinds)
    r = intervention_profile(base, ref, grade_pairs(base, ref, gold), gold)
    counts = tuple(round(x * r.attempted) for x in (r.stay_correct, r.stay_wrong, r.corrected, r.harmed))
    total = r.stay_correct + r.stay_wrong + r.corrected + r.harmed
    ok = (counts == (120, 61, 18, 1) and r.helped_count == 18 and r.hurt_count == 1
          and r.attempted == 200 and abs(total - 1) <= 1e-9)
    report("intervention profile arithmetic (200 pairs)", ok,
           f"cc/ww/wc/cw={counts} helped={r.helped_count} hurt={r.hurt_count} sum={total!r}")


def test_determinism(report, tmp_path):
    questions, _ = _synthetic(100)
    digests = set()
    for conc in (1, 4, 16):
        for rep in range(3):
            _, backends = _synthetic(100)
            out = run_corpus(questions, backends, tmp_path / f"c{conc}-r{rep}.jsonl", mode="full",
                             concurrency=conc, clock=lambda: 0.0)
            digests.add(out.read_bytes())
    report("determinism (100 questions, 3 runs x concurrency 1/4/16)", len(digests) == 1,
           f"distinct outputs={len(digests)}")


def test_ablation_harness(report, tmp_path, capsys):
    paths = synthetic.write(tmp_path / "corpus", 20)
    out_dir = tmp_path / "ablate"
    code = main(["ablate", "--corpus", str(paths["corpus"]), "--retrieval", f"mock:{paths['retrieval']}",
                 "--model", f"mock:{paths['model']}", "--out-dir", str(out_dir)])
    capsys.readouterr()
    by_mode = {
        m: {t["question_id"]: t for t in read_traces(out_dir / f"traces.{m}.jsonl")}
        for m in ("full", "second_pass_original_only", "no_validator", "no_canonicalization",
                  "simple_reconsideration")
    } if code == 0 else {}
    checks = {}
    if by_mode:
        # q0003: refiner revises with no cited evidence; q0001: "in the year 1942"
        full_r5 = by_mode["full"]["q0003"]
        checks["no_validator accepts r5"] = (
            full_r5["validation"]["rejected_rule"] == "r5_no_evidence"
            and full_r5["final_answer"] == "Treaty of Paris"
            and by_mode["no_validator"]["q0003"]["final_answer"] == "Treaty of Ghent"
        )
        checks["no_canonicalization surface form"] = (
            by_mode["no_canonicalization"]["q0001"]["final_answer"] == "in the year 1942"
            and by_mode["full"]["q0001"]["final_answer"] == "1942"
        )
        checks["table written"] = (out_dir / "ablation.json").is_file() and (out_dir / "ablation.csv").is_file()
    report("ablation harness (5 modes, 20 questions)", code == 0 and checks and all(checks.values()),
           f"exit={code} checks={checks}")


def test_live_smoke(report, capsys):
    if os.environ.get("QAREPAIR_LIVE") != "1":
        with capsys.disabled():
            print("\nACCEPTANCE SKIP  live smoke test: set QAREPAIR_LIVE=1 and QAREPAIR_LIVE_CONFIG (see test_live.py)")
        pytest.skip("live smoke test needs real API keys")
    from test_live import run_live_smoke

    ok, detail = run_live_smoke()
    report("live smoke test", ok, detail)
