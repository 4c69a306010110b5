"""Bridge parity: the shared fixture must reproduce with zero differences."""

import json
from pathlib import Path

import pytest

import toolcritic
import toolcritic_bridge as bridge

FIXTURE = Path(__file__).parents[2] / "fixtures" / "bridge_parity.jsonl"


def _vectors():
    return [json.loads(line) for line in FIXTURE.read_text(encoding="utf-8").splitlines()]


def test_fixture_present_and_large_enough():
    assert FIXTURE.exists(), "run the primary test suite to generate the fixture"
    assert len(_vectors()) >= 200


def test_zero_output_differences():
    mismatches = []
    for i, row in enumerate(_vectors()):
        inputs = row["inputs"]
        if row["kind"] == "score":
            got = bridge.bridge_score(inputs["y_star"], inputs["y_hat"])
        elif row["kind"] == "reward":
            got = bridge.bridge_reward(inputs["answer"], inputs["rollout"])
        elif row["kind"] == "advantages":
            got = bridge.bridge_advantages(inputs["rewards"])
        else:
            raise AssertionError(f"unknown vector kind {row['kind']!r}")
        if got != row["expected"]:
            mismatches.append((i, row["kind"], got, row["expected"]))
    assert mismatches == []


def test_version_matches_library_exactly():
    assert bridge.version() == toolcritic.__version__ == bridge.__version__


def test_pinned_examples():
    assert bridge.bridge_score("nothing to do", "no calls here") == 1.0
    two = '<tool_call>\n{"name": "f", "arguments": {"a": 1}}\n</tool_call>\n<tool_call>\n{"name": "g", "arguments": {}}\n</tool_call>'
    one = '<tool_call>\n{"name": "f", "arguments": {"a": 1}}\n</tool_call>'
    assert bridge.bridge_score(two, one) == 0.0
    half = '<tool_call>\n{"name": "f", "arguments": {"a": 1, "b": 3}}\n</tool_call>'
    full = '<tool_call>\n{"name": "f", "arguments": {"a": 1, "b": 2}}\n</tool_call>'
    assert bridge.bridge_score(full, half) == 0.5

    assert bridge.bridge_reward("1", "<choice>1</choice>") == 1
    assert bridge.bridge_reward("1", "no tags") == 0

    adv = bridge.bridge_advantages([1, 0, 0, 0])
    assert adv[0] == pytest.approx(1.7321, abs=1e-4)


def test_group_too_small_propagates():
    with pytest.raises(Exception) as e:
        bridge.bridge_advantages([1.0])
    assert "group" in str(e.value).lower()


def test_callables_are_stateless_across_threads():
    import threading

    results = []

    def worker():
        results.append(bridge.bridge_score("x", "y"))

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results == [1.0] * 8
