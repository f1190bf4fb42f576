"""Brute-force reference for EM and token F1, kept independent of the package.

Normalization walks characters one at a time; F1 matches tokens by repeated
list removal rather than multiset intersection.
"""

import string
import unicodedata


def ref_normalize_tokens(text):
    chars = []
    for ch in text.lower():
        if ch in string.punctuation or unicodedata.category(ch).startswith("P"):
            continue
        chars.append(ch)
    words = []
    current = ""
    for ch in chars:
        if ch.isspace():
            if current:
                words.append(current)
            current = ""
        else:
            current += ch
    if current:
        words.append(current)
    return [w for w in words if w not in ("a", "an", "the")]


def ref_exact_match(pred, gold):
    golds = [gold] if isinstance(gold, str) else gold
    p = ref_normalize_tokens(pred)
    for g in golds:
        if p == ref_normalize_tokens(g):
            return 1
    return 0


def _ref_f1_one(pred_tokens, gold_tokens):
    if len(pred_tokens) == 0 and len(gold_tokens) == 0:
        return 1.0
    if len(pred_tokens) == 0 or len(gold_tokens) == 0:
        return 0.0
    remaining = list(gold_tokens)
    same = 0
    for tok in pred_tokens:
        if tok in remaining:
            remaining.remove(tok)
            same += 1
    if same == 0:
        return 0.0
    precision = same / len(pred_tokens)
    recall = same / len(gold_tokens)
    return (2 * precision * recall) / (precision + recall)


def ref_token_f1(pred, gold):
    golds = [gold] if isinstance(gold, str) else gold
    p = ref_normalize_tokens(pred)
    best = 0.0
    for g in golds:
        best = max(best, _ref_f1_one(p, ref_normalize_tokens(g)))
    return best
