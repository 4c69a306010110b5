"""Judge-query rendering, choice extraction, and verifiable rewards.

A pairwise query presents one conversation history and two candidate
responses; the chosen response is placed second in half of the queries (by a
caller-seeded RNG) and the slot number holding it becomes the expected
answer. Rewards are binary on whether the extracted choice matches, and
rollout groups get mean/std-normalized advantages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import templates
from .ingest import build_system_message
from .pairs import PairwiseSample

MODES = ("think", "no_think")

_PAIRWISE_TEMPLATES = {
    "think": templates.PAIRWISE_THINK_TEMPLATE,
    "no_think": templates.PAIRWISE_NO_THINK_TEMPLATE,
}


class ArityMismatchError(ValueError):
    """Inputs do not match the requested template kind."""


class GroupTooSmallError(ValueError):
    """Advantage normalization needs at least two rollouts."""


@dataclass(frozen=True)
class CritiqueQuery:
    query_text: str
    answer: str  # "1" or "2": the slot holding the chosen response
    swapped: bool
    mode: str
    pair_id: str

    def __post_init__(self):
        if self.answer not in ("1", "2"):
            raise ValueError("answer must be '1' or '2'")
        if self.swapped != (self.answer == "2"):
            raise ValueError("answer must name the slot the chosen response occupies")

    def to_dict(self) -> dict:
        return {
            "id": self.pair_id,
            "query_text": self.query_text,
            "answer": self.answer,
            "swapped": self.swapped,
            "mode": self.mode,
        }


HISTORY_LINE_FORMAT = "[{role}]: {content}"


def render_history(context, line_format: str = HISTORY_LINE_FORMAT) -> str:
    """One `[role]: content` line per message; content stays verbatim.

    The line shape is overridable for judges trained on a different history
    rendering.
    """
    return "\n".join(
        templates.fill(line_format, role=m.role, content=m.content) for m in context
    )


def render_pairwise_text(context, response_1: str, response_2: str, mode: str) -> str:
    if mode not in _PAIRWISE_TEMPLATES:
        raise ValueError(f"unknown mode {mode!r}")
    return templates.fill(
        _PAIRWISE_TEMPLATES[mode],
        chat_history=render_history(context),
        assistant_response_1=response_1,
        assistant_response_2=response_2,
    )


def render_pairwise(sample: PairwiseSample, mode: str, rng) -> CritiqueQuery:
    """Fill the pairwise template, swapping the chosen response into slot 2
    with probability one half."""
    swapped = rng.random() < 0.5
    r1, r2 = (sample.y_minus, sample.y_plus) if swapped else (sample.y_plus, sample.y_minus)
    return CritiqueQuery(
        query_text=render_pairwise_text(sample.context, r1, r2, mode),
        answer="2" if swapped else "1",
        swapped=swapped,
        mode=mode,
        pair_id=sample.pair_id,
    )


def render_auxiliary(kind: str, **inputs) -> str:
    """Render the best-of-N / critic / editor / system-prompt templates."""
    if kind == "bon":
        context = inputs.pop("context", None)
        responses = inputs.pop("responses", None)
        if context is None or not responses:
            raise ArityMismatchError("bon needs a context and at least one response")
        slots = {"chat_history": render_history(context)}
        for i, r in enumerate(responses, start=1):
            slots[f"assistant_response_{i}"] = r
        return templates.fill(templates.bon_template(len(responses)), **slots)
    if kind == "critic":
        context = inputs.pop("context", None)
        response = inputs.pop("response", None)
        if context is None or response is None:
            raise ArityMismatchError("critic needs a context and one response")
        return templates.fill(
            templates.CRITIC_TEMPLATE,
            chat_history=render_history(context),
            assistant_response=response,
        )
    if kind == "editor":
        context = inputs.pop("context", None)
        response = inputs.pop("response", None)
        critique = inputs.pop("critique", None)
        if context is None or response is None or critique is None:
            raise ArityMismatchError("editor needs a context, a response and a critique")
        return templates.fill(
            templates.EDITOR_TEMPLATE,
            chat_history=render_history(context),
            assistant_response=response,
            critique=critique,
        )
    if kind == "system_prompt":
        schemas = inputs.pop("schemas", None)
        if schemas is None:
            raise ArityMismatchError("system_prompt needs a schema list")
        return build_system_message(schemas, inputs.pop("policy", None)).content
    raise ArityMismatchError(f"unknown template kind {kind!r}")


def extract_tag(text: str, tag: str, last: bool = True) -> str | None:
    """Trimmed content of the last (or first) well-formed <tag> block."""
    open_tag, close_tag = f"<{tag}>", f"</{tag}>"
    found = None
    pos = 0
    while True:
        start = text.find(open_tag, pos)
        if start == -1:
            break
        end = text.find(close_tag, start + len(open_tag))
        if end == -1:
            break
        found = text[start + len(open_tag) : end].strip()
        pos = end + len(close_tag)
        if not last:
            return found
    return found


def extract_choice(output: str, strict: bool = False) -> str | None:
    """The model's final choice, or None when no well-formed block exists.

    Reasoning models often restate their pick, so the last block wins by
    default; strict mode requires exactly one block.
    """
    if strict:
        first = extract_tag(output, "choice", last=False)
        final = extract_tag(output, "choice", last=True)
        return first if first is not None and first == final and output.count("<choice>") == 1 else None
    return extract_tag(output, "choice", last=True)


def choice_reward(answer: str, rollout: str) -> int:
    """1 iff a valid choice extracts from the rollout and equals the answer."""
    choice = extract_choice(rollout)
    return 1 if choice is not None and choice == answer.strip() else 0


def reward(query: CritiqueQuery, rollout: str) -> int:
    return choice_reward(query.answer, rollout)


def group_advantages(rewards: list[float]) -> list[float]:
    """Within-group normalized advantages: (r - mean) / population std.

    A zero-variance group yields all-zero advantages rather than an error.
    """
    g = len(rewards)
    if g < 2:
        raise GroupTooSmallError(f"group size {g} < 2")
    mean = sum(rewards) / g
    var = sum((r - mean) ** 2 for r in rewards) / g
    if var == 0.0:
        return [0.0] * g
    std = math.sqrt(var)
    return [(r - mean) / std for r in rewards]


@dataclass(frozen=True)
class RolloutGroup:
    rewards: tuple
    advantages: tuple

    @classmethod
    def from_rewards(cls, rewards) -> "RolloutGroup":
        rewards = tuple(float(r) for r in rewards)
        return cls(rewards=rewards, advantages=tuple(group_advantages(list(rewards))))
