"""Deterministic synthetic tool-use corpus for demos and end-to-end tests.

Generates raw records in the common messages/tools shape, including a few
defective ones (broken role order, repairable schemas, failing tool
responses) so every pipeline stage has something to do. Everything derives
from the seed; the same seed always yields byte-identical records.
"""

from __future__ import annotations

import json
import random

TOOL_POOL = [
    {
        "name": "get_weather",
        "description": "Look up current weather for a city.",
        "parameters": {
            "type": "object",
            "properties": {
                "city": {"type": "string", "description": "City name."},
                "unit": {"type": "string", "description": "celsius or fahrenheit."},
            },
            "required": ["city"],
        },
    },
    {
        "name": "search_flights",
        "description": "Find flights between two airports on a date.",
        "parameters": {
            "type": "object",
            "properties": {
                "origin": {"type": "string", "description": "Origin airport code."},
                "destination": {"type": "string", "description": "Destination airport code."},
                "date": {"type": "string", "description": "Departure date, YYYY-MM-DD."},
                "passengers": {"type": "integer", "description": "Seats needed."},
            },
            "required": ["origin", "destination", "date"],
        },
    },
    {
        "name": "book_hotel",
        "description": "Reserve a hotel room.",
        "parameters": {
            "type": "object",
            "properties": {
                "city": {"type": "string", "description": "Destination city."},
                "nights": {"type": "integer", "description": "Number of nights."},
                "guests": {"type": "integer", "description": "Number of guests."},
            },
            "required": ["city", "nights"],
        },
    },
    {
        "name": "convert_currency",
        "description": "Convert an amount between currencies.",
        "parameters": {
            "type": "object",
            "properties": {
                "amount": {"type": "number", "description": "Amount to convert."},
                "from_code": {"type": "string", "description": "Source currency code."},
                "to_code": {"type": "string", "description": "Target currency code."},
            },
            "required": ["amount", "from_code", "to_code"],
        },
    },
    {
        "name": "get_stock_price",
        "description": "Fetch the latest stock price for a ticker symbol.",
        "parameters": {
            "type": "object",
            "properties": {"symbol": {"type": "string", "description": "Ticker symbol."}},
            "required": ["symbol"],
        },
    },
    {
        "name": "list_inventory",
        "description": "List warehouse inventory filtered by color.",
        "parameters": {
            "type": "object",
            "properties": {
                "color": {"type": "string", "description": "Item color."},
                "date": {"type": "string", "description": "Inventory date, YYYY-MM-DD."},
            },
            "required": ["color", "date"],
        },
    },
]

CITIES = ["Paris", "Tokyo", "Lima", "Oslo", "Cairo", "Sydney"]
AIRPORTS = ["CDG", "HND", "LIM", "OSL", "CAI", "SYD"]
CURRENCIES = ["USD", "EUR", "JPY", "GBP"]
SYMBOLS = ["ACME", "GLOBEX", "INITECH", "UMBRELLA"]
COLORS = ["red", "blue", "green"]
DATES = ["2024-05-01", "2024-06-15", "2024-07-04"]


def _args_for(tool: dict, rng: random.Random) -> dict:
    name = tool["name"]
    if name == "get_weather":
        args = {"city": rng.choice(CITIES)}
        if rng.random() < 0.5:
            args["unit"] = rng.choice(["celsius", "fahrenheit"])
        return args
    if name == "search_flights":
        args = {
            "origin": rng.choice(AIRPORTS),
            "destination": rng.choice(AIRPORTS),
            "date": rng.choice(DATES),
        }
        if rng.random() < 0.5:
            args["passengers"] = rng.randint(1, 4)
        return args
    if name == "book_hotel":
        args = {"city": rng.choice(CITIES), "nights": rng.randint(1, 7)}
        if rng.random() < 0.5:
            args["guests"] = rng.randint(1, 3)
        return args
    if name == "convert_currency":
        return {
            "amount": round(rng.uniform(10, 500), 2),
            "from_code": rng.choice(CURRENCIES),
            "to_code": rng.choice(CURRENCIES),
        }
    if name == "get_stock_price":
        return {"symbol": rng.choice(SYMBOLS)}
    return {"color": rng.choice(COLORS), "date": rng.choice(DATES)}


def _call_block(name: str, args: dict) -> str:
    return f"<tool_call>\n{json.dumps({'name': name, 'arguments': args}, ensure_ascii=False)}\n</tool_call>"


def _assistant_turn(tools: list, rng: random.Random) -> tuple:
    """Returns (content, calls); one or two parallel calls plus a think block."""
    n_calls = 1 if rng.random() < 0.7 else 2
    picked = rng.sample(tools, min(n_calls, len(tools)))
    calls = [(t["name"], _args_for(t, rng)) for t in picked]
    think = f"<think>\nI should call {' and '.join(n for n, _ in calls)} to answer this.\n</think>"
    content = "\n".join([think] + [_call_block(n, a) for n, a in calls])
    return content, calls


def _tool_result(calls: list, rng: random.Random, fail: bool) -> str:
    if fail:
        payload = {"error": rng.choice(["timeout", "service unavailable", "bad gateway"])}
    else:
        payload = {"status": "ok", "results": [{"call": n, "value": rng.randint(1, 100)} for n, _ in calls]}
    return json.dumps(payload, ensure_ascii=False)


def make_raw_records(n_tasks: int, seed: int, source: str = "synthetic") -> list[dict]:
    """Raw corpus records for the default adapter: messages + tools + id."""
    rng = random.Random(seed)
    records = []
    for i in range(n_tasks):
        task_rng = random.Random(rng.randrange(2**63))
        tools = task_rng.sample(TOOL_POOL, task_rng.randint(2, 3))
        tools = [json.loads(json.dumps(t)) for t in tools]

        defect = task_rng.random()
        messages = [
            {
                "role": "user",
                "content": task_rng.choice(
                    [
                        "Plan my trip and check the details.",
                        "I need the latest numbers, can you look them up?",
                        "Help me compare these and book what makes sense.",
                        "Check the inventory situation for me.",
                    ]
                )
                + f" (task {i})",
            }
        ]
        n_turns = task_rng.randint(1, 3)
        for turn in range(n_turns):
            content, calls = _assistant_turn(tools, task_rng)
            last = turn == n_turns - 1
            if last and task_rng.random() < 0.3:
                # close with a text-only answer instead of more calls
                messages.append({"role": "assistant", "content": "All done. Let me know if you need anything else."})
                break
            messages.append({"role": "assistant", "content": content})
            if not last:
                fail = task_rng.random() < 0.08
                messages.append({"role": "tool", "content": _tool_result(calls, task_rng, fail)})

        if defect < 0.06:
            # duplicated user turn: invalid role order, dropped at normalize
            messages.insert(1, {"role": "user", "content": "Are you still there?"})
        elif defect < 0.16:
            # repairable schema defects
            del tools[0]["parameters"]["type"]
            if len(tools) > 1:
                tools[1]["parameters"].setdefault("required", []).append("undeclared_extra")
        elif defect < 0.22:
            # exact duplicate schema, deduped at normalize
            tools.append(json.loads(json.dumps(tools[0])))

        records.append({"id": f"{source}-{i:04d}", "messages": messages, "tools": tools})
    return records


def write_raw_corpus(path, n_tasks: int, seed: int, source: str = "synthetic") -> int:
    from .util import write_jsonl

    return write_jsonl(path, make_raw_records(n_tasks, seed, source))
