"""Synthetic corpora with scripted backends for pipeline-level tests.

Every question cycles through six planted scenarios so that a corpus of any
size exercises accept, reject, keep and malformed paths. Each retrieval query
returns exactly five distinct snippets, so snippet counters hit the k ceiling.
"""

from __future__ import annotations

import json
from pathlib import Path


from qarepair.expand import join_query
from qarepair.model_io import render_verdict

K = 5

# (question template, draft, gold, refiner reply, slot-type?)
SCENARIOS = [
    (
        "Who founded trading house {i}?",
        "Ada Lovelace",
        "Grace Hopper",
        render_verdict("REVISE", "Grace Hopper", "ledger names Grace Hopper as the founder"),
        True,
    ),
    (
        "In what year was widget {i} patented?",
        "1940s",
        "1942",
        render_verdict("REVISE", "in the year 1942", "the patent was granted in 1942"),
        True,
    ),
    (
        "How many moons does planet {i} have?",
        "12",
        "12",
        render_verdict("KEEP", "12", None),
        True,
    ),
    (
        "What treaty ended border war {i}?",
        "Treaty of Paris",
        "Treaty of Ghent",
        render_verdict("REVISE", "Treaty of Ghent", None),
        False,
    ),
    (
        "Where is landmark {i} located?",
        "Paris",
        "Paris",
        "I think it is in Lyon, but I'm not sure.",
        True,
    ),
    (
        "Is landmark {i} open to visitors?",
        "yes",
        "yes",
        render_verdict("REVISE", "maybe", "opening hours vary"),
        False,
    ),
]


def _snippets(tag: str) -> list[dict]:
    return [
        {"title": f"{tag} source {j}", "url": f"https://example.test/{tag}/{j}", "text": f"Snippet {j} about {tag}."}
        for j in range(K)
    ]


def build(n: int) -> tuple[list[dict], dict, dict]:
    """Return (questions, retrieval script, model script) for ``n`` questions."""
    questions, queries, rules = [], {}, []
    for i in range(n):
        tmpl, draft, gold, reply, _slot = SCENARIOS[i % len(SCENARIOS)]
        q = tmpl.format(i=i)
        qid = f"q{i:04d}"
        questions.append({"id": qid, "question": q, "gold": gold})
        queries[q] = _snippets(f"{qid}-first")
        queries[join_query(q, draft)] = _snippets(f"{qid}-joined")
        queries.setdefault(draft, _snippets(f"bare-{draft}"))
        rules.append({"match": [f"Question: {q}\n", "BASELINE ANSWER:"], "completion": reply})
        rules.append({"match": f"Question: {q}\n", "completion": draft})
    return questions, {"queries": queries, "default": []}, {"rules": rules, "default": ""}


def write(directory: Path, n: int) -> dict[str, Path]:
    questions, retrieval, model = build(n)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "corpus": directory / "questions.jsonl",
        "retrieval": directory / "retrieval.json",
        "model": directory / "model.json",
    }
    paths["corpus"].write_text("".join(json.dumps(q) + "\n" for q in questions), encoding="utf-8")
    paths["retrieval"].write_text(json.dumps(retrieval), encoding="utf-8")
    paths["model"].write_text(json.dumps(model), encoding="utf-8")
    return paths
