"""Tests for the tagged message format and trajectory round-trips."""

import json

import pytest
from hypothesis import given, strategies as st

from toolcritic.messages import (
    Block,
    Message,
    NestedTagError,
    RoleOrderError,
    ToolCall,
    ToolCallParseError,
    ToolSchema,
    Trajectory,
    UnclosedTagError,
    dump_trajectory,
    extract_tool_calls,
    load_trajectory,
    parse_content,
)

# Mirrors the format-aligned example trajectory: a think block followed by a
# single tool call.
EXAMPLE_ASSISTANT = (
    "<think>\n"
    "The user wants to count the red and blue items in the warehouse inventory today and compare "
    "their quantities. We will start by retrieving and counting the red items first.\n"
    "</think>\n"
    "<tool_call>\n"
    '{"name": "get_items_by_color", "arguments": {"color": "red", "date": "2023-10-05"}}\n'
    "</tool_call>"
)


def test_single_tool_call_block():
    content = '<tool_call>\n{"name": "f", "arguments": {}}\n</tool_call>'
    blocks = list(parse_content(content))
    assert len(blocks) == 1
    assert blocks[0].kind == "tool_call"
    assert json.loads(blocks[0].payload) == {"name": "f", "arguments": {}}


def test_plain_text_is_one_text_block():
    blocks = list(parse_content("hello"))
    assert blocks == [Block("text", "hello")]


def test_example_assistant_message_blocks():
    kinds = [b.kind for b in parse_content(EXAMPLE_ASSISTANT) if b.kind != "text"]
    assert kinds == ["think", "tool_call"]


def test_unclosed_tag_is_an_error_not_a_silent_block():
    with pytest.raises(UnclosedTagError) as e:
        parse_content("before <tool_call> {\"name\": \"f\"}")
    assert e.value.tag == "tool_call"
    assert e.value.offset == 7


def test_nested_identical_tag_rejected():
    with pytest.raises(NestedTagError):
        parse_content("<think>a<think>b</think></think>")


def test_foreign_tag_inside_payload_is_plain_payload():
    blocks = list(parse_content("<think>use <tool_call> later</think>"))
    assert [b.kind for b in blocks] == ["think"]
    assert blocks[0].payload == "use <tool_call> later"


def test_stray_close_tag_is_text():
    blocks = list(parse_content("oops </tool_call> done"))
    assert [b.kind for b in blocks] == ["text"]


def test_extract_tool_calls_in_document_order():
    content = (
        '<tool_call>\n{"name": "a", "arguments": {"x": 1}}\n</tool_call>\n'
        '<tool_call>\n{"name": "b", "arguments": {}}\n</tool_call>'
    )
    calls = extract_tool_calls(content)
    assert [c.name for c in calls] == ["a", "b"]


def test_extract_tool_calls_empty_for_text_only():
    assert extract_tool_calls("The total is 200.") == []


def test_missing_arguments_is_parse_failure():
    with pytest.raises(ToolCallParseError):
        extract_tool_calls('<tool_call>{"name": "f"}</tool_call>')


@pytest.mark.parametrize(
    "payload",
    [
        "not json",
        "[1, 2]",
        '{"name": 3, "arguments": {}}',
        '{"name": "f", "arguments": []}',
        '{"arguments": {}}',
    ],
)
def test_bad_tool_call_payloads(payload):
    with pytest.raises(ToolCallParseError):
        extract_tool_calls(f"<tool_call>{payload}</tool_call>")


def test_unclosed_tag_makes_calls_unparsable():
    with pytest.raises(ToolCallParseError):
        extract_tool_calls('<tool_call>{"name": "f", "arguments": {}}')


_tag_free_text = st.text(alphabet=st.characters(blacklist_characters="<"), max_size=40)


@st.composite
def _contents(draw):
    parts = []
    for _ in range(draw(st.integers(0, 4))):
        kind = draw(st.sampled_from(["text", "think", "tool_call", "tool_response"]))
        payload = draw(_tag_free_text)
        if kind == "text":
            if payload:
                parts.append(payload)
        else:
            parts.append(f"<{kind}>{payload}</{kind}>")
    return "".join(parts)


@given(_contents())
def test_parse_never_drops_bytes(content):
    assert parse_content(content).serialize() == content


@given(_contents())
def test_parse_is_deterministic(content):
    assert parse_content(content) == parse_content(content)


def test_message_role_enum_enforced():
    with pytest.raises(ValueError):
        Message(role="narrator", content="x")


def test_tool_call_canonical_is_key_order_independent():
    a = ToolCall("f", {"x": 1, "y": 2})
    b = ToolCall("f", {"y": 2, "x": 1})
    assert a.canonical() == b.canonical()


def test_tool_schema_requires_declared_required_names():
    with pytest.raises(ValueError):
        ToolSchema("f", "", {"type": "object", "properties": {}, "required": ["x"]})


def _make_trajectory():
    schema = ToolSchema(
        "get_items_by_color",
        "Retrieve items by color.",
        {
            "type": "object",
            "properties": {
                "color": {"type": "string", "description": "The color."},
                "date": {"type": "string", "description": "YYYY-MM-DD."},
            },
            "required": ["color", "date"],
        },
    )
    return Trajectory(
        id="traj-1",
        source="button",
        messages=(
            Message("system", "# Tools\n<tools>\n</tools>"),
            Message("user", "Count the red items."),
            Message("assistant", EXAMPLE_ASSISTANT),
            Message("user", '<tool_response>\n{"items": []}\n</tool_response>'),
            Message("assistant", "There are no red items."),
        ),
        schemas=(schema,),
        agent_policy=None,
    )


def test_trajectory_roundtrip_through_jsonl():
    traj = _make_trajectory()
    line = dump_trajectory(traj)
    again = load_trajectory(line)
    assert again == traj
    assert dump_trajectory(again) == line


def test_trajectory_must_start_with_system():
    with pytest.raises(RoleOrderError):
        Trajectory(id="t", source="s", messages=(Message("user", "hi"),))


def test_trajectory_rejects_illegal_transition():
    with pytest.raises(RoleOrderError):
        Trajectory(
            id="t",
            source="s",
            messages=(Message("system", "s"), Message("user", "a"), Message("user", "b")),
        )


def test_tool_role_transitions_allowed():
    Trajectory(
        id="t",
        source="s",
        messages=(
            Message("system", "s"),
            Message("user", "q"),
            Message("assistant", "a"),
            Message("tool", "r"),
            Message("assistant", "done"),
        ),
    )
