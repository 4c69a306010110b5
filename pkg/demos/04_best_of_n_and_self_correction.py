"""Walkthrough: best-of-N selection and the critique/edit loop.

Both flows reuse the judge templates: BoN numbers the candidates and asks for
one choice; self-correction asks a critic for a short critique, then routes
anything other than '[correct]' through an editor for a revision.

Run with: python3 demos/04_best_of_n_and_self_correction.py
"""

import re

from toolcritic import Message, bon_select, self_correct

context = (
    Message("system", "# Tools\n<tools>\n...\n</tools>"),
    Message("user", "Book a table for two at 19:00 and text me a confirmation."),
)

candidates = [
    '<tool_call>\n{"name": "book_table", "arguments": {"guests": 2}}\n</tool_call>',
    '<tool_call>\n{"name": "book_table", "arguments": {"guests": 2, "time": "19:00"}}\n</tool_call>\n'
    '<tool_call>\n{"name": "send_sms", "arguments": {"text": "Booked for 19:00"}}\n</tool_call>',
    "I would rather not call any tools.",
    '<tool_call>\n{"name": "book_table", "arguments": {"guests": 2, "time": "19:00"}}\n</tool_call>',
]


def judge(prompt: str) -> str:
    """Prefers the complete two-call plan; falls back to the smallest number."""
    for slot in range(1, 10):
        m = re.search(rf"<current_response_{slot}>\n(.*?)\n</current_response_{slot}>", prompt, re.S)
        if m and "send_sms" in m.group(1) and "19:00" in m.group(1):
            return f"<choice>\n{slot}\n</choice>"
    return "<choice>\n1\n</choice>"


print("== best-of-N ==")
result = bon_select(judge, context, candidates)
print(f"selected candidate {result.index} of {len(candidates)}"
      + (f" (flagged: {result.reason})" if result.flagged else ""))

broken_judge = lambda prompt: "<choice>\nseven\n</choice>"
result = bon_select(broken_judge, context, candidates)
print(f"broken judge falls back to candidate {result.index}, reason={result.reason}")

print("\n== self-correction ==")


def policy(messages):
    # first draft forgets the confirmation text
    return '<tool_call>\n{"name": "book_table", "arguments": {"guests": 2, "time": "19:00"}}\n</tool_call>'


def critic(prompt):
    if "send_sms" in prompt.split("<current_response>")[1]:
        return "<critique>\n[correct]\n</critique>"
    return "<critique>\nThe confirmation text message is missing; add a send_sms call.\n</critique>"


def editor(prompt):
    critique = prompt.split("<critique>\n")[1].split("\n</critique>")[0]
    assert "send_sms" in critique
    return (
        "<revised_response>\n"
        '<tool_call>\n{"name": "book_table", "arguments": {"guests": 2, "time": "19:00"}}\n</tool_call>\n'
        '<tool_call>\n{"name": "send_sms", "arguments": {"text": "Booked for 19:00"}}\n</tool_call>\n'
        "</revised_response>"
    )


outcome = self_correct(policy, critic, editor, context)
print(f"critique: {outcome.critique}")
print(f"final response now has {outcome.final.count('<tool_call>')} calls "
      f"(draft had {outcome.original.count('<tool_call>')})")
print(f"output tokens per stage: {outcome.tokens}")

# A '[correct]' critique short-circuits: the draft comes back unchanged and
# the editor never runs.
good_draft = outcome.final
outcome = self_correct(lambda m: good_draft, critic, editor, context)
print(f"\nsecond pass: critique={outcome.critique!r}, editor ran: {outcome.revised is not None}")
