"""Tests for record normalization, schema repair, and system-message assembly."""

import json

import pytest

from toolcritic.ingest import (
    IngestReport,
    RejectionError,
    SourceAdapter,
    build_system_message,
    get_adapter,
    normalize,
    normalize_stream,
    validate_schemas,
)
from toolcritic.messages import ToolSchema, Trajectory, dump_trajectory

COLOR_SCHEMA = {
    "name": "get_items_by_color",
    "description": "Retrieve all items in the inventory filtered by a specified color.",
    "parameters": {
        "required": ["color", "date"],
        "type": "object",
        "properties": {
            "color": {"type": "string", "description": "The color of the items to be retrieved."},
            "date": {"type": "string", "description": "The date for which the inventory is being checked, in YYYY-MM-DD format."},
        },
    },
}

COUNT_SCHEMA = {
    "name": "count_items",
    "description": "Count the number of items in a given list.",
    "parameters": {
        "required": ["items"],
        "type": "object",
        "properties": {"items": {"type": "array", "description": "The list of items to be counted."}},
    },
}


def _record(messages, tools=None, **extra):
    rec = {"messages": messages, "id": "rec-1"}
    if tools is not None:
        rec["tools"] = tools
    rec.update(extra)
    return rec


def adapter():
    return SourceAdapter(source_id="button")


class TestNormalize:
    def test_legal_transition_chain_kept(self):
        rec = _record(
            [
                {"role": "user", "content": "hi"},
                {"role": "assistant", "content": "hello"},
                {"role": "user", "content": "more"},
                {"role": "assistant", "content": "done"},
            ]
        )
        traj, _ = normalize(rec, adapter())
        assert [m.role for m in traj.messages] == ["system", "user", "assistant", "user", "assistant"]

    def test_consecutive_user_messages_rejected(self):
        rec = _record(
            [
                {"role": "user", "content": "a"},
                {"role": "user", "content": "b"},
                {"role": "assistant", "content": "c"},
            ]
        )
        with pytest.raises(RejectionError) as e:
            normalize(rec, adapter())
        assert e.value.reason == "InvalidRoleOrder"

    def test_multi_step_tool_record_normalizes_to_seven_messages(self):
        # Mirrors the warehouse-inventory example: three assistant turns with
        # two intervening tool responses, first message is the assembled
        # system message.
        rec = _record(
            [
                {"role": "user", "content": "Count the red and blue items."},
                {"role": "assistant", "content": '<tool_call>\n{"name": "get_items_by_color", "arguments": {"color": "red", "date": "2023-10-05"}}\n</tool_call>'},
                {"role": "tool", "content": '{"items": ["shirt", "mug", "hat"]}'},
                {"role": "assistant", "content": '<tool_call>\n{"name": "count_items", "arguments": {"items": ["shirt", "mug", "hat"]}}\n</tool_call>'},
                {"role": "tool", "content": '{"count": 3}'},
                {"role": "assistant", "content": "There are 3 red items."},
            ],
            tools=[COLOR_SCHEMA, COUNT_SCHEMA],
        )
        traj, _ = normalize(rec, adapter())
        assert len(traj.messages) == 7
        assert traj.messages[0].role == "system"
        # tool responses got rewritten into tagged user messages
        assert traj.messages[3].role == "user"
        assert traj.messages[3].content.startswith("<tool_response>")
        assert [s.name for s in traj.schemas] == ["get_items_by_color", "count_items"]

    def test_empty_conversation_rejected(self):
        with pytest.raises(RejectionError) as e:
            normalize(_record([]), adapter())
        assert e.value.reason == "EmptyConversation"

    def test_unmappable_record_rejected(self):
        with pytest.raises(RejectionError) as e:
            normalize({"id": "x"}, adapter())
        assert e.value.reason == "UnmappableRecord"

    def test_leading_system_message_becomes_policy(self):
        rec = _record(
            [
                {"role": "system", "content": "Always confirm before booking."},
                {"role": "user", "content": "hi"},
                {"role": "assistant", "content": "hello"},
            ]
        )
        traj, _ = normalize(rec, adapter())
        assert traj.agent_policy == "Always confirm before booking."
        assert "# Agent Policy\nAlways confirm before booking." in traj.messages[0].content

    def test_roundtrip_of_normalized_trajectory(self):
        rec = _record(
            [
                {"role": "user", "content": "hi"},
                {"role": "assistant", "content": "hello"},
            ],
            tools=[COUNT_SCHEMA],
        )
        traj, _ = normalize(rec, adapter())
        line = dump_trajectory(traj)
        assert Trajectory.from_dict(json.loads(line)) == traj

    def test_determinism(self):
        rec = _record(
            [{"role": "user", "content": "hi"}, {"role": "assistant", "content": "ok"}],
            tools=[COLOR_SCHEMA],
        )
        a, _ = normalize(rec, adapter())
        b, _ = normalize(rec, adapter())
        assert dump_trajectory(a) == dump_trajectory(b)


class TestValidateSchemas:
    def test_exact_duplicates_deduped(self):
        schemas, log = validate_schemas([COUNT_SCHEMA, json.loads(json.dumps(COUNT_SCHEMA))])
        assert len(schemas) == 1
        assert [e.action for e in log] == ["deduped"]

    def test_missing_root_type_repaired(self):
        raw = {"name": "f", "description": "", "parameters": {"properties": {"x": {"type": "string"}}}}
        schemas, log = validate_schemas([raw])
        assert schemas[0].parameters["type"] == "object"
        assert any(e.action == "repaired" and "type" in e.detail for e in log)

    def test_required_undeclared_property_backfilled(self):
        raw = {
            "name": "f",
            "description": "",
            "parameters": {"type": "object", "properties": {}, "required": ["x"]},
        }
        schemas, log = validate_schemas([raw])
        assert schemas[0].parameters["properties"]["x"] == {"type": "string", "description": ""}
        # the repaired schema satisfies the invariants again
        ToolSchema.from_dict(schemas[0].to_dict())

    def test_bare_parameter_list_coerced(self):
        raw = {
            "name": "f",
            "description": "",
            "parameters": [
                {"name": "x", "type": "string", "description": "d", "required": True},
                {"name": "y", "type": "integer", "description": "e"},
            ],
        }
        schemas, log = validate_schemas([raw])
        params = schemas[0].parameters
        assert set(params["properties"]) == {"x", "y"}
        assert params["required"] == ["x"]

    def test_unrepairable_schema_dropped(self):
        schemas, log = validate_schemas([{"description": "no name"}, "garbage"])
        assert schemas == []
        assert all(e.action == "dropped" for e in log)

    def test_function_wrapper_unwrapped(self):
        wrapped = {"type": "function", "function": COUNT_SCHEMA}
        schemas, _ = validate_schemas([wrapped])
        assert schemas[0].name == "count_items"

    def test_same_name_different_params_keeps_first(self):
        other = json.loads(json.dumps(COUNT_SCHEMA))
        other["parameters"]["properties"]["extra"] = {"type": "string"}
        schemas, log = validate_schemas([COUNT_SCHEMA, other])
        assert len(schemas) == 1
        assert schemas[0].parameters == COUNT_SCHEMA["parameters"]
        assert any(e.action == "name_conflict" for e in log)

    def test_idempotent(self):
        raw = [
            COLOR_SCHEMA,
            {"name": "f", "description": "", "parameters": {"properties": {}}},
        ]
        first, _ = validate_schemas(raw)
        second, log = validate_schemas([s.to_dict() for s in first])
        assert [s.to_dict() for s in second] == [s.to_dict() for s in first]
        assert log == []


class TestBuildSystemMessage:
    def test_minimal_fill_without_policy(self):
        msg = build_system_message([ToolSchema.from_dict(COUNT_SCHEMA)])
        assert msg.role == "system"
        assert msg.content.startswith("# Tools\n")
        assert '"type": "function"' in msg.content
        assert "# Agent Policy" not in msg.content

    def test_two_schemas_and_policy(self):
        schemas = [ToolSchema.from_dict(COLOR_SCHEMA), ToolSchema.from_dict(COUNT_SCHEMA)]
        msg = build_system_message(schemas, policy="Be terse.")
        tools_block = msg.content.split("<tools>\n", 1)[1].split("\n</tools>", 1)[0]
        lines = tools_block.split("\n")
        assert len(lines) == 2
        assert all(json.loads(line)["type"] == "function" for line in lines)
        assert msg.content.endswith("# Agent Policy\nBe terse.")

    def test_zero_schemas_still_emits_message(self):
        msg = build_system_message([])
        assert "<tools>\n\n</tools>" in msg.content

    def test_rendered_call_example_is_literal(self):
        msg = build_system_message([])
        assert '{"name": <function-name>, "arguments": <args-json-object>}' in msg.content


class TestNormalizeStream:
    def test_report_counts_add_up(self):
        records = [
            _record([{"role": "user", "content": "a"}, {"role": "assistant", "content": "b"}]),
            _record([{"role": "user", "content": "a"}, {"role": "user", "content": "b"}]),
            _record([]),
            {"bogus": True},
        ]
        report = IngestReport()
        kept = list(normalize_stream(records, adapter(), report))
        counts = report.counts("button")
        assert counts.raw == 4
        assert counts.kept == len(kept) == 1
        assert counts.dropped_role_order == 1
        assert counts.dropped_empty == 1
        assert counts.dropped_unmappable == 1
        report.check()

    def test_fallback_ids_are_positional(self):
        records = [
            {"messages": [{"role": "user", "content": "a"}, {"role": "assistant", "content": "b"}]}
            for _ in range(2)
        ]
        kept = list(normalize_stream(records, adapter()))
        assert [t.id for t in kept] == ["button:000000", "button:000001"]


def test_default_adapter_registry():
    assert get_adapter("apigen-mt").policy_field == "policy"
    with pytest.raises(KeyError):
        get_adapter("unknown-source")
