"""Independent brute-force oracles and random generators used by the tests.

Everything here is deliberately written from the scoring rules directly,
without importing the library's scorer, so the two paths can disagree.
"""

from __future__ import annotations

import json
import random


def normalize_value(v):
    """Fold a JSON value into a comparison key: strings lowercase, numbers by
    value, containers recursively."""
    if isinstance(v, str):
        return ("s", v.lower())
    if isinstance(v, bool):
        return ("b", v)
    if isinstance(v, (int, float)):
        return ("n", float(v))
    if isinstance(v, list):
        return ("l", tuple(normalize_value(x) for x in v))
    if isinstance(v, dict):
        return ("d", tuple(sorted((k, normalize_value(x)) for k, x in v.items())))
    return ("z",)


def exact_value(v):
    """Comparison key for call identity: exact types, case-sensitive strings."""
    if isinstance(v, bool):
        return ("b", v)
    if isinstance(v, int):
        return ("i", v)
    if isinstance(v, float):
        return ("f", v)
    if isinstance(v, str):
        return ("s", v)
    if isinstance(v, list):
        return ("l", tuple(exact_value(x) for x in v))
    if isinstance(v, dict):
        return ("d", tuple(sorted((k, exact_value(x)) for k, x in v.items())))
    return ("z",)


def sim_oracle(a: dict, b: dict) -> float:
    union = set(a) | set(b)
    if not union:
        return 1.0
    hits = 0
    for k in union:
        if k in a and k in b and normalize_value(a[k]) == normalize_value(b[k]):
            hits += 1
    return hits / len(union)


def score_oracle(gt_calls, pred_calls):
    """Brute-force scoring over (name, arguments) pair lists.

    Returns the numeric score; parsing is out of scope here (the library is
    fed pre-rendered content, this path gets the raw call lists).
    """
    if len(gt_calls) == 0 and len(pred_calls) == 0:
        return 1.0
    if len(gt_calls) != len(pred_calls):
        return 0.0
    for i in range(len(pred_calls)):
        for j in range(len(pred_calls)):
            if i == j:
                continue
            ni, ai = pred_calls[i]
            nj, aj = pred_calls[j]
            if ni == nj and exact_value(ai) == exact_value(aj):
                return 0.0
    total = 0.0
    for name, args in gt_calls:
        best = 0.0
        for pname, pargs in pred_calls:
            if pname == name:
                s = sim_oracle(args, pargs)
                if s > best:
                    best = s
        total += best
    return total / len(gt_calls)


NAMES = ("alpha", "beta", "gamma", "delta")
KEYS = ("a", "b", "c", "d")


def random_value(rng: random.Random, depth: int = 0):
    kinds = ["int", "float", "str", "bool", "null"]
    if depth < 1:
        kinds += ["list", "dict"]
    kind = rng.choice(kinds)
    if kind == "int":
        return rng.randint(-3, 3)
    if kind == "float":
        return rng.choice([0.5, 1.0, 2.25, -1.5, 3.0])
    if kind == "str":
        return rng.choice(["Paris", "paris", "PARIS", "london", "x_y", "42"])
    if kind == "bool":
        return rng.choice([True, False])
    if kind == "null":
        return None
    if kind == "list":
        return [random_value(rng, depth + 1) for _ in range(rng.randint(0, 3))]
    return {rng.choice(KEYS): random_value(rng, depth + 1) for _ in range(rng.randint(0, 3))}


def random_call(rng: random.Random):
    name = rng.choice(NAMES)
    args = {k: random_value(rng) for k in rng.sample(KEYS, rng.randint(0, 4))}
    return (name, args)


def random_call_list(rng: random.Random, max_calls: int = 4):
    return [random_call(rng) for _ in range(rng.randint(0, max_calls))]


def mutate_call_list(rng: random.Random, calls):
    """Derive a predicted list from a ground-truth list so that interesting
    partial overlaps actually occur."""
    preds = [(n, dict(a)) for n, a in calls]
    for _ in range(rng.randint(0, 3)):
        op = rng.choice(["drop", "add", "tweak", "rename", "shuffle", "dup"])
        if op == "drop" and preds:
            preds.pop(rng.randrange(len(preds)))
        elif op == "add":
            preds.append(random_call(rng))
        elif op == "tweak" and preds:
            n, a = preds[rng.randrange(len(preds))]
            if a:
                k = rng.choice(list(a))
                a[k] = random_value(rng)
            else:
                a[rng.choice(KEYS)] = random_value(rng)
        elif op == "rename" and preds:
            i = rng.randrange(len(preds))
            preds[i] = (rng.choice(NAMES), preds[i][1])
        elif op == "shuffle":
            rng.shuffle(preds)
        elif op == "dup" and preds:
            n, a = preds[rng.randrange(len(preds))]
            preds.append((n, dict(a)))
    return preds


def render_calls(calls, think: str | None = None) -> str:
    parts = []
    if think:
        parts.append(f"<think>\n{think}\n</think>")
    for name, args in calls:
        payload = json.dumps({"name": name, "arguments": args}, ensure_ascii=False)
        parts.append(f"<tool_call>\n{payload}\n</tool_call>")
    if not parts:
        return "No tool call is needed."
    return "\n".join(parts)
