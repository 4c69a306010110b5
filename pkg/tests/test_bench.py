"""Tests for benchmark pairs, the both-order protocol, BoN, and self-correction."""

import json
import re

import pytest

from toolcritic.bench import (
    BenchPair,
    BonResult,
    bon_select,
    build_bench_pairs,
    concat_calls,
    evaluate_pairwise,
    evaluate_scalar,
    make_report,
    self_correct,
    EvalRecord,
)
from toolcritic.messages import Message

CTX = [{"role": "system", "content": "s"}, {"role": "user", "content": "u"}]


def _pair(i, split="a", chosen="GOOD", rejected="BAD"):
    return BenchPair(
        split=split,
        task_id=f"t{i}",
        context=(Message("system", "s"), Message("user", f"task {i}")),
        chosen=f"{chosen} {i}",
        rejected=f"{rejected} {i}",
    )


def oracle_judge(prompt: str) -> str:
    """Picks whichever current_response block contains the GOOD marker."""
    for slot in ("1", "2"):
        m = re.search(rf"<current_response_{slot}>\n(.*?)\n</current_response_{slot}>", prompt, re.S)
        if m and "GOOD" in m.group(1):
            return f"<choice>\n{slot}\n</choice>"
    return "<choice>\n1\n</choice>"


def always_one_judge(prompt: str) -> str:
    return "<choice>\n1\n</choice>"


class TestBuildBenchPairsSingle:
    def test_one_failure_one_pair(self):
        tasks = [
            {
                "task_id": "t1",
                "split": "simple",
                "context": CTX,
                "oracle": "call A",
                "failures": [{"model": "m", "response": "call B", "error_type": "wrong_arg"}],
            }
        ]
        pairs, skipped = build_bench_pairs(tasks, "single")
        assert len(pairs) == 1 and skipped == []
        assert pairs[0].chosen == "call A"
        assert pairs[0].rejected == "call B"
        assert pairs[0].error_type == "wrong_arg"
        assert pairs[0].rejected_source_model == "m"

    def test_all_correct_task_skipped(self):
        tasks = [{"task_id": "t1", "context": CTX, "oracle": "x", "failures": []}]
        pairs, skipped = build_bench_pairs(tasks, "single")
        assert pairs == [] and skipped == ["t1"]

    def test_identical_failure_skipped(self):
        tasks = [{"task_id": "t1", "context": CTX, "oracle": "x", "failures": [{"model": "m", "response": "x"}]}]
        pairs, skipped = build_bench_pairs(tasks, "single")
        assert pairs == [] and skipped == ["t1"]


class TestBuildBenchPairsMulti:
    def make_task(self, gen_turns):
        gt = [
            [{"name": "a", "arguments": {"x": 1}}],
            [{"name": "b", "arguments": {"y": 2}}, {"name": "c", "arguments": {}}],
            [{"name": "d", "arguments": {}}],
        ]
        return {
            "task_id": "mt1",
            "split": "multi",
            "context": CTX,
            "gt_turns": gt,
            "failures": [{"model": "m", "turns": gen_turns}],
        }

    def test_first_incorrect_turn_paired(self):
        gen = [
            [{"name": "a", "arguments": {"x": 1}}],  # turn 0 correct
            [{"name": "b", "arguments": {"y": 99}}],  # turn 1 wrong
            [{"name": "d", "arguments": {}}],
        ]
        pairs, _ = build_bench_pairs([self.make_task(gen)], "multi")
        assert len(pairs) == 1
        assert pairs[0].chosen == concat_calls([{"name": "b", "arguments": {"y": 2}}, {"name": "c", "arguments": {}}])
        assert pairs[0].rejected == concat_calls([{"name": "b", "arguments": {"y": 99}}])

    def test_missing_turn_counts_as_incorrect(self):
        gen = [[{"name": "a", "arguments": {"x": 1}}]]
        pairs, _ = build_bench_pairs([self.make_task(gen)], "multi")
        assert len(pairs) == 1
        assert pairs[0].rejected == ""

    def test_fully_correct_generation_skipped(self):
        gen = [
            [{"name": "a", "arguments": {"x": 1}}],
            [{"name": "b", "arguments": {"y": 2}}, {"name": "c", "arguments": {}}],
            [{"name": "d", "arguments": {}}],
        ]
        pairs, skipped = build_bench_pairs([self.make_task(gen)], "multi")
        assert pairs == [] and skipped == ["mt1"]

    def test_concat_wraps_each_call(self):
        text = concat_calls([{"name": "a", "arguments": {}}, {"name": "b", "arguments": {}}])
        assert text.count("<tool_call>") == 2
        assert text.count("</tool_call>") == 2
        assert "\n</tool_call>\n<tool_call>\n" in text


class TestEvaluatePairwise:
    def test_oracle_judge_scores_100(self):
        report, records = evaluate_pairwise(oracle_judge, [_pair(i) for i in range(10)])
        assert report.splits[0].accuracy == 100.0
        assert all(r.correct for r in records)

    def test_always_one_judge_scores_0(self):
        report, records = evaluate_pairwise(always_one_judge, [_pair(i) for i in range(10)])
        assert report.splits[0].accuracy == 0.0
        # pass A looks right, pass B exposes the position bias
        assert all(r.pass_a_choice == "1" and r.pass_b_choice == "1" for r in records)

    def test_order_disagreement_contributes_zero(self):
        record = EvalRecord(split="a", task_id="t", pass_a_choice="1", pass_b_choice="1", correct=False)
        report = make_report([record])
        assert report.splits[0].accuracy == 0.0

    def test_judge_error_counts_incorrect_with_flag(self):
        def flaky(prompt):
            raise ConnectionError("down")

        report, records = evaluate_pairwise(flaky, [_pair(0)])
        assert records[0].correct is False
        assert "JudgeError" in records[0].flags
        assert report.flags["JudgeError"] == 1

    def test_invalid_choice_flagged(self):
        report, records = evaluate_pairwise(lambda p: "no tags", [_pair(0)])
        assert records[0].correct is False
        assert "InvalidChoice" in records[0].flags

    def test_avg_and_weighted_avg(self):
        # split a: 100 pairs at 50%; split b: 300 pairs at 90%
        pairs = [_pair(i, split="a") for i in range(100)] + [_pair(1000 + i, split="b") for i in range(300)]
        correct_a = {f"t{i}" for i in range(50)}
        correct_b = {f"t{1000 + i}" for i in range(270)}

        def mixed(prompt):
            m = re.search(r"\[user\]: task (\d+)", prompt)
            i = int(m.group(1))
            tid = f"t{i}"
            if tid in correct_a or tid in correct_b:
                return oracle_judge(prompt)
            return always_one_judge(prompt)

        report, _ = evaluate_pairwise(mixed, pairs)
        by_name = {s.name: s for s in report.splits}
        assert by_name["a"].accuracy == 50.0
        assert by_name["b"].accuracy == 90.0
        assert report.avg == 70.0
        assert report.w_avg == 80.0

    def test_report_arithmetic_recomputable(self):
        report, records = evaluate_pairwise(oracle_judge, [_pair(i, split=f"s{i % 3}") for i in range(9)])
        for s in report.splits:
            rs = [r for r in records if r.split == s.name]
            assert abs(s.accuracy - 100.0 * sum(r.correct for r in rs) / len(rs)) < 1e-9
        assert abs(report.w_avg - sum(s.n * s.accuracy for s in report.splits) / sum(s.n for s in report.splits)) < 1e-9
        assert min(s.accuracy for s in report.splits) <= report.avg <= max(s.accuracy for s in report.splits)


class TestEvaluateScalar:
    def test_strict_inequality(self):
        def score_fn(context, response):
            if "GOOD" in response:
                return 0.9
            return 0.9 if "tie" in response else 0.1

        pairs = [_pair(0), _pair(1, chosen="GOOD tie", rejected="BAD tie")]
        report, records = evaluate_scalar(score_fn, pairs)
        assert records[0].correct is True
        assert records[1].correct is False  # tie counts as incorrect


class TestBonSelect:
    def test_n1_short_circuits_without_judge(self):
        def explode(prompt):
            raise AssertionError("judge must not be called for N=1")

        assert bon_select(explode, [Message("user", "u")], ["only"]) == BonResult(index=1)

    def test_judge_choice_used(self):
        result = bon_select(lambda p: "<choice>3</choice>", [Message("user", "u")], ["a", "b", "c", "d"])
        assert result.index == 3 and not result.flagged

    def test_out_of_range_falls_back_flagged(self):
        result = bon_select(lambda p: "<choice>7</choice>", [Message("user", "u")], ["a", "b", "c", "d"])
        assert result.index == 1 and result.flagged
        assert result.reason == "InvalidChoice"

    def test_non_numeric_choice_flagged(self):
        result = bon_select(lambda p: "<choice>first</choice>", [Message("user", "u")], ["a", "b"])
        assert result.index == 1 and result.flagged

    def test_max_candidates_enforced(self):
        with pytest.raises(ValueError):
            bon_select(lambda p: "", [Message("user", "u")], ["x"] * 3, max_candidates=2)


class TestSelfCorrect:
    CONTEXT = (Message("system", "s"), Message("user", "add 2+2"))

    def test_correct_critique_keeps_original(self):
        calls = {"editor": 0}

        def editor(prompt):
            calls["editor"] += 1
            return "<revised_response>should not happen</revised_response>"

        result = self_correct(
            policy=lambda msgs: "draft answer",
            critic=lambda p: "<critique>\n[correct]\n</critique>",
            editor=editor,
            context=self.CONTEXT,
        )
        assert result.final == "draft answer"
        assert calls["editor"] == 0
        assert result.flags == ()

    def test_critique_routes_through_editor(self):
        seen = {}

        def editor(prompt):
            seen["prompt"] = prompt
            return "<revised_response>\nfixed answer\n</revised_response>"

        result = self_correct(
            policy=lambda msgs: "draft answer",
            critic=lambda p: "<critique>\nwrong argument value\n</critique>",
            editor=editor,
            context=self.CONTEXT,
        )
        assert result.final == "fixed answer"
        assert result.critique == "wrong argument value"
        assert "<critique>\nwrong argument value\n</critique>" in seen["prompt"]

    def test_malformed_critique_returns_original_flagged(self):
        result = self_correct(
            policy=lambda msgs: "draft",
            critic=lambda p: "no tags at all",
            editor=lambda p: "",
            context=self.CONTEXT,
        )
        assert result.final == "draft"
        assert result.flags == ("MalformedCritique",)

    def test_malformed_revision_returns_original_flagged(self):
        result = self_correct(
            policy=lambda msgs: "draft",
            critic=lambda p: "<critique>fix it</critique>",
            editor=lambda p: "forgot the tags",
            context=self.CONTEXT,
        )
        assert result.final == "draft"
        assert result.flags == ("MalformedRevision",)

    def test_token_accounting(self):
        result = self_correct(
            policy=lambda msgs: ("three word draft", 3),
            critic=lambda p: "<critique>too short</critique>",
            editor=lambda p: "<revised_response>longer</revised_response>",
            context=self.CONTEXT,
        )
        assert result.tokens["policy"] == 3
        assert result.tokens["critic"] == len("<critique>too short</critique>".split())
        assert "editor" in result.tokens

class TestReplayDeterminism:
    def test_cached_judge_reproduces_report(self, tmp_path):
        import httpx
        from toolcritic.bench import endpoint_judge
        from toolcritic.client import ChatClient, EndpointConfig

        pairs = [_pair(i, split=f"s{i % 2}") for i in range(6)]
        live_calls = {"n": 0}

        def handler(request):
            live_calls["n"] += 1
            prompt = json.loads(request.content)["messages"][0]["content"]
            return httpx.Response(
                200,
                json={
                    "choices": [{"message": {"role": "assistant", "content": oracle_judge(prompt)}}],
                    "usage": {"completion_tokens": 3},
                },
            )

        ep = EndpointConfig(model_id="judge", base_url="http://mock/v1")
        with ChatClient(cache_dir=tmp_path / "cache", transport=httpx.MockTransport(handler)) as client:
            first, _ = evaluate_pairwise(endpoint_judge(client, ep), pairs)
        assert live_calls["n"] == 12  # two passes per pair

        def dead(request):
            raise AssertionError("replay must not hit the network")

        with ChatClient(cache_dir=tmp_path / "cache", transport=httpx.MockTransport(dead)) as client:
            replay, _ = evaluate_pairwise(endpoint_judge(client, ep), pairs)
        assert replay == first
