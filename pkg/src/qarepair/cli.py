"""Command-line entry point: run, report, ablate, validate-config."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from collections import Counter
from pathlib import Path
from typing import Any, Sequence

from .config import (
    RunConfig,
    build_backends,
    build_grader,
    load_config,
    parse_backend_spec,
    resolve_paths,
)
from .errors import ConfigError, InvalidInputError, QARepairError
from .evaluation import (
    exact_match,
    format_transition_table,
    grade_pairs,
    intervention_profile,
    token_f1,
    transition_rows,
    write_report,
)
from .pipeline import ABLATION_MODES, PipelineMode, load_questions, read_traces, run_corpus

logger = logging.getLogger("qarepair")

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML/JSON run configuration file")
    p.add_argument("--corpus", help="input questions JSONL")
    p.add_argument("--k-b", type=int, help="first-pass snippets per question (default 5)")
    p.add_argument("--k-r", type=int, help="snippets per second-pass query (default 5)")
    p.add_argument("--concurrency", type=int, help="questions in flight (default 1)")
    p.add_argument("--retrieval", help="retrieval backend: mock:FILE, corpus:FILE or web")
    p.add_argument("--model", help="model backend: mock:FILE or http")
    p.add_argument("--prompts", help="prompt template file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qarepair", description="Answer-conditioned guarded QA repair.")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the pipeline over a corpus")
    _add_run_options(run)
    run.add_argument("--mode", choices=[m.value for m in PipelineMode])
    run.add_argument("--output", help="trace JSONL to write")

    rep = sub.add_parser("report", help="compare a baseline and a refined trace file")
    rep.add_argument("--baseline", required=True)
    rep.add_argument("--refined", required=True)
    rep.add_argument("--gold", help="JSONL with id and gold; defaults to gold stored in traces")
    rep.add_argument("--grader", choices=["default", "external"], default=None)
    rep.add_argument("--config", help="config file supplying external grader settings")
    rep.add_argument("--out", help="output prefix (writes PREFIX.json and PREFIX.csv)")

    abl = sub.add_parser("ablate", help="run several modes over one corpus and compare EM/F1")
    _add_run_options(abl)
    abl.add_argument("--modes", nargs="+", choices=[m.value for m in PipelineMode],
                     default=[m.value for m in ABLATION_MODES])
    abl.add_argument("--out-dir", required=True)

    val = sub.add_parser("validate-config", help="check a config and print its effective form")
    _add_run_options(val)
    val.add_argument("--mode", choices=[m.value for m in PipelineMode])
    val.add_argument("--output")
    return parser


def effective_config(args: argparse.Namespace) -> RunConfig:
    """Config file values overridden by flags; flag paths resolve against the cwd."""
    cfg = load_config(getattr(args, "config", None))
    over: dict[str, Any] = cfg.to_dict()
    flag_map = {
        "corpus": "corpus_path",
        "output": "output_path",
        "mode": "mode",
        "k_b": "k_b",
        "k_r": "k_r",
        "concurrency": "concurrency",
        "prompts": "prompt_path",
    }
    for flag, key in flag_map.items():
        value = getattr(args, flag, None)
        if value is not None:
            over[key] = value
    for flag in ("retrieval", "model"):
        spec = getattr(args, flag, None)
        if spec:
            parsed = parse_backend_spec(spec)
            if parsed["kind"] == over[flag].get("kind"):
                over[flag] = {**over[flag], **parsed}
            else:
                over[flag] = parsed
    cfg = resolve_paths(RunConfig.from_dict(over), Path.cwd())
    cfg.check()
    return cfg


def _need_corpus(cfg: RunConfig):
    if not cfg.corpus_path:
        raise ConfigError("no corpus given (--corpus or corpus_path in the config)")
    if not Path(cfg.corpus_path).is_file():
        raise ConfigError(f"corpus file not found: {cfg.corpus_path}")
    try:
        questions = load_questions(cfg.corpus_path)
    except InvalidInputError as exc:
        raise ConfigError(str(exc))
    if not questions:
        raise ConfigError(f"corpus {cfg.corpus_path} has no questions")
    return questions


def _progress(done: int, total: int) -> None:
    if done == total or done % 25 == 0:
        print(f"[{done}/{total}]", file=sys.stderr)


def _summarize(path: Path) -> dict[str, int]:
    traces = read_traces(path)
    status = Counter(t.get("status", "ok") for t in traces)
    revised = sum(
        1 for t in traces
        if t.get("draft") and t.get("final_answer") and t["final_answer"] != t["draft"]["text"]
    )
    return {
        "questions": len(traces),
        "ok": status["ok"],
        "not_attempted": status["not_attempted"],
        "errors": status["error"],
        "format_failures": sum(bool(t.get("format_failure")) for t in traces),
        "revised": revised,
        "retrieval_queries": sum(t.get("counters", {}).get("retrieval_queries", 0) for t in traces),
        "model_calls": sum(t.get("counters", {}).get("model_calls", 0) for t in traces),
    }


def cmd_run(args: argparse.Namespace) -> int:
    cfg = effective_config(args)
    if not cfg.output_path:
        raise ConfigError("no output path given (--output or output_path in the config)")
    questions = _need_corpus(cfg)
    backends = build_backends(cfg)
    out = run_corpus(
        questions,
        backends,
        cfg.output_path,
        mode=cfg.mode,
        concurrency=cfg.concurrency,
        k_b=cfg.k_b,
        k_r=cfg.k_r,
        config_hash=cfg.config_hash(),
        progress=_progress,
    )
    summary = _summarize(out)
    print(json.dumps({"output": str(out), "mode": cfg.mode, **summary}, indent=2))
    return EXIT_OK


def _load_gold(path: str | None, traces: list[dict[str, Any]]) -> dict[str, Any]:
    if path:
        if not Path(path).is_file():
            raise ConfigError(f"gold file not found: {path}")
        return {q.id: q.gold for q in load_questions(path) if q.gold not in (None, "", [])}
    return {str(t["question_id"]): t["gold"] for t in traces if t.get("gold") not in (None, "", [])}


def cmd_report(args: argparse.Namespace) -> int:
    for p in (args.baseline, args.refined):
        if not Path(p).is_file():
            raise ConfigError(f"trace file not found: {p}")
    baseline = read_traces(args.baseline)
    refined = read_traces(args.refined)
    gold = _load_gold(args.gold, refined)
    grader_conf: dict[str, Any] = load_config(args.config).grader if args.config else {"kind": "default"}
    if args.grader:
        grader_conf = {**grader_conf, "kind": args.grader}
    grader = build_grader(grader_conf)
    try:
        grades = grade_pairs(baseline, refined, gold, grader)
        report = intervention_profile(baseline, refined, grades, gold)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rows = transition_rows(baseline, refined, grades)
    prefix = Path(args.out) if args.out else Path(args.refined).with_suffix("").with_name(
        Path(args.refined).stem + ".report"
    )
    json_path = prefix.with_name(prefix.name + ".json")
    csv_path = prefix.with_name(prefix.name + ".csv")
    write_report(report, rows, json_path, csv_path)
    print(format_transition_table(report))
    print(f"wrote {json_path} and {csv_path}")
    return EXIT_OK


ABLATION_FIELDS = ("mode", "em", "f1", "revise_rate", "format_failures")


def ablation_table(rows: list[dict[str, Any]]) -> str:
    lines = [f"{'variant':<28}{'EM':>8}{'F1':>8}{'revised':>10}"]
    for r in rows:
        lines.append(f"{r['mode']:<28}{100 * r['em']:>8.1f}{100 * r['f1']:>8.1f}{100 * r['revise_rate']:>10.1f}")
    return "\n".join(lines)


def cmd_ablate(args: argparse.Namespace) -> int:
    modes = list(dict.fromkeys(args.modes))
    if len(modes) < 2:
        print("error: ablate needs at least two distinct modes", file=sys.stderr)
        return EXIT_CONFIG
    cfg = effective_config(args)
    questions = _need_corpus(cfg)
    missing = [q.id for q in questions if q.gold in (None, "", [])]
    if missing:
        raise ConfigError(f"ablation needs gold answers; missing for: {', '.join(missing[:10])}")
    backends = build_backends(cfg)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for mode in modes:
        path = out_dir / f"traces.{mode}.jsonl"
        run_corpus(questions, backends, path, mode=mode, concurrency=cfg.concurrency,
                   k_b=cfg.k_b, k_r=cfg.k_r, config_hash=cfg.config_hash())
        traces = {t["question_id"]: t for t in read_traces(path)}
        finals = [traces[q.id].get("final_answer") or "" for q in questions]
        drafts = [(traces[q.id].get("draft") or {}).get("text") for q in questions]
        rows.append({
            "mode": mode,
            "em": sum(exact_match(f, q.gold) for f, q in zip(finals, questions)) / len(questions),
            "f1": sum(token_f1(f, q.gold) for f, q in zip(finals, questions)) / len(questions),
            "revise_rate": sum(d is not None and f != d for f, d in zip(finals, drafts)) / len(questions),
            "format_failures": sum(bool(t.get("format_failure")) for t in traces.values()),
            "traces": str(path),
        })
    (out_dir / "ablation.json").write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
    with open(out_dir / "ablation.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=[*ABLATION_FIELDS, "traces"])
        writer.writeheader()
        writer.writerows(rows)
    print(ablation_table(rows))
    return EXIT_OK


def cmd_validate_config(args: argparse.Namespace) -> int:
    cfg = effective_config(args)
    build_backends(cfg)
    build_grader(cfg.grader)
    print(json.dumps({"config": cfg.to_dict(), "config_hash": cfg.config_hash()}, indent=2))
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "report": cmd_report,
    "ablate": cmd_ablate,
    "validate-config": cmd_validate_config,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, QARepairError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
