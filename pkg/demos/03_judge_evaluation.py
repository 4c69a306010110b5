"""Walkthrough: judging preference pairs with the position-swapped protocol.

Every pair is presented twice, once in each response order; the judge only
earns credit when both passes pick the chosen response. A judge that always
answers "1" looks right half the time per pass, yet scores exactly zero,
which is the point of the protocol.

Run with: python3 demos/03_judge_evaluation.py
"""

import re

from toolcritic import BenchPair, Message, evaluate_pairwise, evaluate_scalar

pairs = []
for i in range(40):
    pairs.append(
        BenchPair(
            split="lookup" if i % 2 else "booking",
            task_id=f"t{i}",
            context=(Message("system", "# Tools ..."), Message("user", f"request {i}")),
            chosen=f'<tool_call>\n{{"name": "search", "arguments": {{"q": "right {i}"}}}}\n</tool_call>',
            rejected=f'<tool_call>\n{{"name": "search", "arguments": {{"q": "wrong {i}"}}}}\n</tool_call>',
        )
    )


def oracle(prompt: str) -> str:
    """A judge that actually reads both responses."""
    for slot in ("1", "2"):
        m = re.search(rf"<current_response_{slot}>\n(.*?)\n</current_response_{slot}>", prompt, re.S)
        if m and "right" in m.group(1):
            return f"<choice>\n{slot}\n</choice>"
    return "<choice>\n1\n</choice>"


def first_slot_bias(prompt: str) -> str:
    """A judge with total position bias."""
    return "<choice>\n1\n</choice>"


def flaky_oracle(prompt: str) -> str:
    """Right on even tasks, biased on odd ones."""
    i = int(re.search(r"request (\d+)", prompt).group(1))
    return oracle(prompt) if i % 4 != 1 else first_slot_bias(prompt)


for name, judge in [("oracle", oracle), ("always-1", first_slot_bias), ("flaky", flaky_oracle)]:
    report, records = evaluate_pairwise(judge, pairs, mode="think")
    split_str = "  ".join(f"{s.name}={s.accuracy:.1f}% (n={s.n})" for s in report.splits)
    print(f"{name:9s} {split_str}  avg={report.avg:.1f}  w-avg={report.w_avg:.1f}  flags={report.flags}")

# Scalar reward models plug in through a score function; credit requires the
# chosen response to score strictly higher (ties lose).
print("\nscalar judge:")


def scalar(context, response):
    return 0.8 if "right" in response else 0.2


report, _ = evaluate_scalar(scalar, pairs)
print(f"  avg={report.avg:.1f}  w-avg={report.w_avg:.1f}")
