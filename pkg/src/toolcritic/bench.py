"""Benchmark pair construction, both-order judge evaluation, best-of-N
selection, and the critique/edit self-correction loop.

Judges are plain callables from prompt text to model output, so the same
harness runs against live endpoints, recorded caches, or in-process stubs.
A pair counts as correct only when both presentation orders pick the chosen
response; judge failures count as incorrect (with a flag) so accuracy
denominators stay comparable across judges.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .client import ChatClient, EndpointConfig
from .critique import extract_choice, extract_tag, render_auxiliary, render_pairwise_text
from .messages import Message

FLAG_JUDGE_ERROR = "JudgeError"
FLAG_INVALID_CHOICE = "InvalidChoice"
FLAG_MALFORMED_CRITIQUE = "MalformedCritique"
FLAG_MALFORMED_REVISION = "MalformedRevision"


class NoFailureError(ValueError):
    """The task has no failing response to pair against."""


@dataclass(frozen=True)
class BenchPair:
    split: str
    task_id: str
    context: tuple
    chosen: str
    rejected: str
    error_type: str | None = None
    rejected_source_model: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "context", tuple(self.context))
        if self.chosen == self.rejected:
            raise ValueError("chosen and rejected must differ")

    def to_dict(self) -> dict:
        d = {
            "split": self.split,
            "task_id": self.task_id,
            "context": [m.to_dict() for m in self.context],
            "chosen": self.chosen,
            "rejected": self.rejected,
        }
        if self.error_type is not None:
            d["error_type"] = self.error_type
        if self.rejected_source_model is not None:
            d["rejected_source_model"] = self.rejected_source_model
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BenchPair":
        return cls(
            split=d["split"],
            task_id=d["task_id"],
            context=tuple(Message.from_dict(m) for m in d["context"]),
            chosen=d["chosen"],
            rejected=d["rejected"],
            error_type=d.get("error_type"),
            rejected_source_model=d.get("rejected_source_model"),
        )


@dataclass(frozen=True)
class EvalRecord:
    split: str
    task_id: str
    pass_a_choice: str | None
    pass_b_choice: str | None
    correct: bool
    flags: tuple = ()

    def to_dict(self) -> dict:
        return {
            "split": self.split,
            "task_id": self.task_id,
            "pass_a_choice": self.pass_a_choice,
            "pass_b_choice": self.pass_b_choice,
            "correct": self.correct,
            "flags": list(self.flags),
        }


@dataclass(frozen=True)
class SplitScore:
    name: str
    n: int
    accuracy: float  # percent


@dataclass(frozen=True)
class ScoreReport:
    splits: tuple
    avg: float
    w_avg: float
    flags: dict

    def to_dict(self) -> dict:
        return {
            "splits": [{"name": s.name, "n": s.n, "accuracy": s.accuracy} for s in self.splits],
            "avg": self.avg,
            "w_avg": self.w_avg,
            "flags": dict(self.flags),
        }


def _canonical_call(call) -> str:
    if isinstance(call, str):
        try:
            call = json.loads(call)
        except json.JSONDecodeError:
            return call
    return json.dumps(call, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def concat_calls(calls) -> str:
    """Join a turn's tool calls, each in its own tags, newline separated."""
    rendered = []
    for call in calls:
        payload = call if isinstance(call, str) else json.dumps(call, ensure_ascii=False)
        rendered.append(f"<tool_call>\n{payload}\n</tool_call>")
    return "\n".join(rendered)


def build_bench_pairs(tasks: list[dict], turn_mode: str = "single") -> tuple[list, list]:
    """Build chosen/rejected pairs from labeled benchmark tasks.

    Single-turn tasks pair the oracle answer against each failed model
    response. Multi-turn tasks locate the first turn whose generated calls
    differ from the ground-truth calls and pair the two turns' concatenated
    call blocks. Returns (pairs, skipped_task_ids); tasks where nothing
    failed, or where chosen and rejected coincide, are skipped.
    """
    if turn_mode not in ("single", "multi"):
        raise ValueError("turn_mode must be 'single' or 'multi'")
    pairs: list[BenchPair] = []
    skipped: list[str] = []
    for task in tasks:
        task_id = task["task_id"]
        split = task.get("split", "default")
        context = tuple(Message.from_dict(m) for m in task.get("context", []))
        failures = task.get("failures", [])
        made_any = False
        for failure in failures:
            if turn_mode == "single":
                chosen = task["oracle"]
                rejected = failure["response"]
            else:
                gt_turns = task["gt_turns"]
                gen_turns = failure.get("turns", [])
                bad_turn = None
                for t, gt in enumerate(gt_turns):
                    gen = gen_turns[t] if t < len(gen_turns) else []
                    if [_canonical_call(c) for c in gen] != [_canonical_call(c) for c in gt]:
                        bad_turn = t
                        break
                if bad_turn is None:
                    continue
                chosen = concat_calls(gt_turns[bad_turn])
                rejected = concat_calls(gen_turns[bad_turn] if bad_turn < len(gen_turns) else [])
                turn_contexts = task.get("turn_contexts")
                if turn_contexts:
                    context = tuple(Message.from_dict(m) for m in turn_contexts[bad_turn])
            if chosen == rejected:
                continue
            pairs.append(
                BenchPair(
                    split=split,
                    task_id=task_id,
                    context=context,
                    chosen=chosen,
                    rejected=rejected,
                    error_type=failure.get("error_type"),
                    rejected_source_model=failure.get("model"),
                )
            )
            made_any = True
        if not made_any:
            skipped.append(task_id)
    return pairs, skipped


def make_report(records: list[EvalRecord]) -> ScoreReport:
    by_split: dict[str, list[EvalRecord]] = {}
    for r in records:
        by_split.setdefault(r.split, []).append(r)
    splits = []
    for name in sorted(by_split):
        rs = by_split[name]
        acc = 100.0 * sum(r.correct for r in rs) / len(rs)
        splits.append(SplitScore(name=name, n=len(rs), accuracy=acc))
    avg = sum(s.accuracy for s in splits) / len(splits) if splits else 0.0
    total = sum(s.n for s in splits)
    w_avg = sum(s.n * s.accuracy for s in splits) / total if total else 0.0
    flags: dict[str, int] = {}
    for r in records:
        for f in r.flags:
            flags[f] = flags.get(f, 0) + 1
    return ScoreReport(splits=tuple(splits), avg=avg, w_avg=w_avg, flags=flags)


def evaluate_pairwise(judge, pairs: list[BenchPair], mode: str = "think") -> tuple[ScoreReport, list[EvalRecord]]:
    """Both-order protocol: each pair is judged twice with the response order
    swapped; credit requires both passes to pick the chosen response."""
    records = []
    for pair in pairs:
        flags = []
        choice_a = choice_b = None
        try:
            out_a, _ = _tokens(judge(render_pairwise_text(pair.context, pair.chosen, pair.rejected, mode)))
            out_b, _ = _tokens(judge(render_pairwise_text(pair.context, pair.rejected, pair.chosen, mode)))
            choice_a = extract_choice(out_a)
            choice_b = extract_choice(out_b)
        except Exception:  # endpoint errors count as incorrect, flagged
            flags.append(FLAG_JUDGE_ERROR)
        correct = choice_a == "1" and choice_b == "2"
        if not flags and (choice_a not in ("1", "2") or choice_b not in ("1", "2")):
            flags.append(FLAG_INVALID_CHOICE)
        records.append(
            EvalRecord(
                split=pair.split,
                task_id=pair.task_id,
                pass_a_choice=choice_a,
                pass_b_choice=choice_b,
                correct=correct,
                flags=tuple(flags),
            )
        )
    return make_report(records), records


def evaluate_scalar(score_fn, pairs: list[BenchPair]) -> tuple[ScoreReport, list[EvalRecord]]:
    """Adapter for scalar-output judges: correct iff score(chosen) strictly
    exceeds score(rejected); ties count as incorrect."""
    records = []
    for pair in pairs:
        flags = []
        s_chosen = s_rejected = None
        try:
            s_chosen = score_fn(pair.context, pair.chosen)
            s_rejected = score_fn(pair.context, pair.rejected)
            correct = s_chosen > s_rejected
        except Exception:
            flags.append(FLAG_JUDGE_ERROR)
            correct = False
        records.append(
            EvalRecord(
                split=pair.split,
                task_id=pair.task_id,
                pass_a_choice=None if s_chosen is None else str(s_chosen),
                pass_b_choice=None if s_rejected is None else str(s_rejected),
                correct=correct,
                flags=tuple(flags),
            )
        )
    return make_report(records), records


@dataclass(frozen=True)
class BonResult:
    index: int  # 1-based
    flagged: bool = False
    reason: str | None = None


def bon_select(judge, context, candidates: list[str], max_candidates: int = 64) -> BonResult:
    """Pick one of N candidate responses via the judge; ties are instructed
    to resolve to the smallest number. Invalid output falls back to 1."""
    n = len(candidates)
    if n < 1 or n > max_candidates:
        raise ValueError(f"need 1..{max_candidates} candidates, got {n}")
    if n == 1:
        return BonResult(index=1)
    prompt = render_auxiliary("bon", context=context, responses=list(candidates))
    try:
        out, _ = _tokens(judge(prompt))
        choice = extract_choice(out)
    except Exception as e:
        return BonResult(index=1, flagged=True, reason=f"{FLAG_JUDGE_ERROR}: {e}")
    try:
        idx = int(choice) if choice is not None else None
    except ValueError:
        idx = None
    if idx is None or not 1 <= idx <= n:
        return BonResult(index=1, flagged=True, reason=FLAG_INVALID_CHOICE)
    return BonResult(index=idx)


def _tokens(output) -> tuple:
    """Normalize a judge return into (text, token_count)."""
    if isinstance(output, tuple):
        text, count = output
        return text, int(count)
    return output, len(output.split())


@dataclass(frozen=True)
class SelfCorrectionResult:
    final: str
    original: str
    critique: str | None
    revised: str | None
    tokens: dict
    flags: tuple = ()


def self_correct(policy, critic, editor, context) -> SelfCorrectionResult:
    """Answer, critique, and revise once.

    The policy sees the raw conversation; the critic judges the draft via the
    critique template; a '[correct]' critique returns the draft untouched,
    anything else goes through the editor template. Missing tags abort the
    stage and fall back to the previous answer, flagged.
    """
    flags = []
    tokens = {}
    draft, tokens["policy"] = _tokens(policy(list(context)))

    critic_out, tokens["critic"] = _tokens(critic(render_auxiliary("critic", context=context, response=draft)))
    critique = extract_tag(critic_out, "critique")
    if critique is None:
        return SelfCorrectionResult(
            final=draft, original=draft, critique=None, revised=None,
            tokens=tokens, flags=(FLAG_MALFORMED_CRITIQUE,),
        )
    if critique.strip() == "[correct]":
        return SelfCorrectionResult(
            final=draft, original=draft, critique=critique, revised=None, tokens=tokens,
        )

    editor_out, tokens["editor"] = _tokens(
        editor(render_auxiliary("editor", context=context, response=draft, critique=critique))
    )
    revised = extract_tag(editor_out, "revised_response")
    if revised is None:
        return SelfCorrectionResult(
            final=draft, original=draft, critique=critique, revised=None,
            tokens=tokens, flags=(FLAG_MALFORMED_REVISION,),
        )
    return SelfCorrectionResult(
        final=revised, original=draft, critique=critique, revised=revised, tokens=tokens,
    )


def endpoint_judge(client: ChatClient, endpoint: EndpointConfig):
    """Wrap an endpoint as a prompt-text judge callable."""

    def judge(prompt: str):
        result = client.complete(endpoint, [Message("user", prompt)])
        usage = result.get("usage") or {}
        if "completion_tokens" in usage:
            return result["content"], usage["completion_tokens"]
        return result["content"]

    return judge


def endpoint_policy(client: ChatClient, endpoint: EndpointConfig):
    """Wrap an endpoint as a conversation-driven policy callable."""

    def policy(messages):
        result = client.complete(endpoint, list(messages))
        usage = result.get("usage") or {}
        if "completion_tokens" in usage:
            return result["content"], usage["completion_tokens"]
        return result["content"]

    return policy
