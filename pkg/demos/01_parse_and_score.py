"""Walkthrough: the tagged message format and rule-based response scoring.

Run with: python3 demos/01_parse_and_score.py
"""

import json

from toolcritic import extract_tool_calls, parse_content, score_response, sim

# An assistant turn in the tagged format: a think block, then one tool call
# per <tool_call> block with a JSON payload.
assistant = """<think>
The user wants today's weather for two cities, so I need two lookups.
</think>
<tool_call>
{"name": "get_weather", "arguments": {"city": "Paris", "unit": "celsius"}}
</tool_call>
<tool_call>
{"name": "get_weather", "arguments": {"city": "Tokyo", "unit": "celsius"}}
</tool_call>"""

print("== parsing ==")
for block in parse_content(assistant):
    preview = block.payload.strip().replace("\n", " ")[:60]
    print(f"  {block.kind:13s} {preview}")

calls = extract_tool_calls(assistant)
print(f"\nextracted {len(calls)} calls:")
for c in calls:
    print(f"  {c.name}({json.dumps(c.arguments)})")

# Scoring compares a sampled response against the ground truth. Argument
# similarity is the share of identical key-value pairs over all unique keys;
# strings compare case-insensitively.
print("\n== argument similarity ==")
print("  sim({}, {})                         ->", sim({}, {}))
print('  sim({a:1,b:2}, {a:1,c:3})           ->', round(sim({"a": 1, "b": 2}, {"a": 1, "c": 3}), 4))
print('  sim({q:"Paris"}, {q:"paris"})       ->', sim({"q": "Paris"}, {"q": "paris"}))

print("\n== response scoring ==")
ground_truth = assistant

perfect = assistant.replace("celsius", "CELSIUS")  # case differences do not matter
wrong_city = assistant.replace("Tokyo", "Osaka", 1)
one_call_only = assistant.split("</tool_call>")[0] + "</tool_call>"
garbled = '<tool_call>\n{"name": "get_weather"\n</tool_call>'

for label, candidate in [
    ("identical modulo case", perfect),
    ("one wrong argument", wrong_city),
    ("missing a call", one_call_only),
    ("unparsable payload", garbled),
]:
    result = score_response(ground_truth, candidate)
    extra = f" ({result.disqualifier})" if result.disqualifier else ""
    print(f"  {label:22s} -> {result.score_json()}{extra}")

# Note the last outcome: an unparsable response is reported as "unparsable",
# not coerced to a zero score, so it can be excluded from preference pools.
