"""Adapt raw corpus records into format-aligned trajectories.

Adapters are declarative field mappings, so a new corpus drop only needs a
config, not code. Normalization assembles a uniform tool-calling system
message, rewrites role-"tool" responses into tagged user messages, and rejects
records whose role order breaks the allowed transitions. Schema validation
applies a closed, logged repair set; anything outside it drops the schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

from .messages import Message, ROLE_TRANSITIONS, RoleOrderError, ToolSchema, Trajectory
from . import templates

REJECT_INVALID_ROLE_ORDER = "InvalidRoleOrder"
REJECT_EMPTY_CONVERSATION = "EmptyConversation"
REJECT_UNMAPPABLE_RECORD = "UnmappableRecord"

# Aliases seen across the source corpora for the four canonical roles.
DEFAULT_ROLE_MAP = {
    "system": "system",
    "user": "user",
    "human": "user",
    "assistant": "assistant",
    "gpt": "assistant",
    "model": "assistant",
    "tool": "tool",
    "function": "tool",
    "observation": "tool",
}


class RejectionError(ValueError):
    """A record that cannot become a valid trajectory; carries the rule."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


@dataclass(frozen=True)
class SourceAdapter:
    """Field mapping from one corpus' record shape onto trajectory parts."""

    source_id: str
    messages_field: str = "messages"
    role_field: str = "role"
    content_field: str = "content"
    schemas_field: str = "tools"
    policy_field: str | None = None
    id_field: str | None = "id"
    system_to_policy: bool = True  # leading system message becomes the agent policy
    role_map: tuple = tuple(sorted(DEFAULT_ROLE_MAP.items()))

    def map_role(self, raw: str) -> str | None:
        return dict(self.role_map).get(str(raw).lower())

    @classmethod
    def from_dict(cls, d: dict) -> "SourceAdapter":
        d = dict(d)
        if "role_map" in d:
            d["role_map"] = tuple(sorted(dict(d["role_map"]).items()))
        return cls(**d)


# The seven corpus ids supported out of the box, plus the bundled synthetic
# corpus. All use the common messages/tools shape by default; per-drop field
# names are overridable via adapter configs.
SOURCE_IDS = (
    "apigen",
    "apigen-mt",
    "button",
    "complexfuncbench",
    "glaive",
    "hermes",
    "toolalpaca",
    "synthetic",
)

DEFAULT_ADAPTERS = {sid: SourceAdapter(source_id=sid) for sid in SOURCE_IDS}
DEFAULT_ADAPTERS["apigen-mt"] = SourceAdapter(source_id="apigen-mt", policy_field="policy")


def get_adapter(source_id: str) -> SourceAdapter:
    try:
        return DEFAULT_ADAPTERS[source_id]
    except KeyError:
        raise KeyError(f"unknown source {source_id!r}; known: {', '.join(SOURCE_IDS)}") from None


@dataclass
class RepairEntry:
    name: str
    action: str  # repaired | deduped | dropped | name_conflict
    detail: str


@dataclass
class SourceCounts:
    raw: int = 0
    kept: int = 0
    dropped_role_order: int = 0
    dropped_empty: int = 0
    dropped_unmappable: int = 0
    dropped_schema: int = 0
    repaired_schema: int = 0
    deduped_schema: int = 0

    def record_drops(self) -> int:
        return self.dropped_role_order + self.dropped_empty + self.dropped_unmappable


@dataclass
class IngestReport:
    """Per-source ingest counters; record-level drops sum back to raw."""

    per_source: dict = field(default_factory=dict)

    def counts(self, source: str) -> SourceCounts:
        return self.per_source.setdefault(source, SourceCounts())

    def to_dict(self) -> dict:
        return {src: asdict(c) for src, c in sorted(self.per_source.items())}

    def check(self) -> None:
        for src, c in self.per_source.items():
            if c.kept + c.record_drops() != c.raw:
                raise AssertionError(f"{src}: kept + drops != raw")


def _canonical_params(parameters: dict) -> str:
    return json.dumps(parameters, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _coerce_parameter_list(params: list) -> dict | None:
    """Turn a bare parameter list into a property map, or None if entries
    lack usable names."""
    props = {}
    required = []
    for entry in params:
        if not isinstance(entry, dict) or not isinstance(entry.get("name"), str):
            return None
        name = entry["name"]
        spec = {k: v for k, v in entry.items() if k not in ("name", "required")}
        props[name] = spec
        if entry.get("required"):
            required.append(name)
    out = {"type": "object", "properties": props}
    if required:
        out["required"] = required
    return out


def validate_schemas(raw_schemas: list) -> tuple[list[ToolSchema], list[RepairEntry]]:
    """Validate, repair and dedup raw tool schemas.

    The repair set is closed: insert a missing root ``"type": "object"``,
    create an empty ``properties`` map, backfill required-but-undeclared
    properties as string-typed, and coerce a bare parameter list into a
    property map. Exact duplicates (same name and canonical parameters) keep
    the first occurrence; same-name schemas with different parameters also
    keep the first, logged as a name conflict. Anything else drops the schema.
    """
    out: list[ToolSchema] = []
    log: list[RepairEntry] = []
    seen_exact: set = set()
    seen_names: set = set()
    for raw in raw_schemas:
        if isinstance(raw, dict) and raw.get("type") == "function" and isinstance(raw.get("function"), dict):
            raw = raw["function"]
        if not isinstance(raw, dict):
            log.append(RepairEntry(name="?", action="dropped", detail="schema is not an object"))
            continue
        name = raw.get("name")
        if not isinstance(name, str) or not name:
            log.append(RepairEntry(name="?", action="dropped", detail="missing or empty name"))
            continue
        description = raw.get("description")
        if not isinstance(description, str):
            description = "" if description is None else str(description)
        params = raw.get("parameters")

        repairs = []
        if params is None:
            params = {"type": "object", "properties": {}}
            repairs.append("created empty parameters object")
        elif isinstance(params, list):
            coerced = _coerce_parameter_list(params)
            if coerced is None:
                log.append(RepairEntry(name=name, action="dropped", detail="parameter list entries lack names"))
                continue
            params = coerced
            repairs.append("coerced bare parameter list into a property map")
        elif isinstance(params, dict):
            params = dict(params)
        else:
            log.append(RepairEntry(name=name, action="dropped", detail="parameters is neither object nor list"))
            continue

        if params.get("type") != "object":
            if "type" in params and params["type"] != "object":
                repairs.append(f"replaced root type {params['type']!r} with \"object\"")
            else:
                repairs.append('inserted missing root "type": "object"')
            params["type"] = "object"
        props = params.get("properties")
        if props is None:
            params["properties"] = {}
            repairs.append('created empty "properties" map')
        elif not isinstance(props, dict):
            log.append(RepairEntry(name=name, action="dropped", detail="properties is not an object"))
            continue
        required = params.get("required", [])
        if not isinstance(required, list) or not all(isinstance(r, str) for r in required):
            log.append(RepairEntry(name=name, action="dropped", detail="required is not a list of names"))
            continue
        for r in required:
            if r not in params["properties"]:
                params["properties"][r] = {"type": "string", "description": ""}
                repairs.append(f"backfilled required-but-undeclared property {r!r} as string")

        schema = ToolSchema(name=name, description=description, parameters=params)
        exact_key = (name, _canonical_params(params))
        if exact_key in seen_exact:
            log.append(RepairEntry(name=name, action="deduped", detail="exact duplicate removed"))
            continue
        if name in seen_names:
            log.append(RepairEntry(name=name, action="name_conflict", detail="same name with different parameters; kept first"))
            continue
        seen_exact.add(exact_key)
        seen_names.add(name)
        for r in repairs:
            log.append(RepairEntry(name=name, action="repaired", detail=r))
        out.append(schema)
    return out, log


def build_system_message(schemas: list[ToolSchema], policy: str | None = None) -> Message:
    """Assemble the uniform tool-calling system message.

    Each schema is wrapped as ``{"type": "function", "function": {...}}``,
    one per line inside the <tools> block; the Agent Policy section appears
    only when a non-empty policy is given.
    """
    descs = "\n".join(
        json.dumps({"type": "function", "function": s.to_dict()}, ensure_ascii=False) for s in schemas
    )
    content = templates.fill(templates.SYSTEM_TEMPLATE, tool_descs=descs)
    if policy:
        content += templates.fill(templates.SYSTEM_POLICY_SECTION, agent_policy=policy)
    return Message(role="system", content=content)


def _wrap_tool_response(content: str) -> str:
    if "<tool_response>" in content:
        return content
    return f"<tool_response>\n{content}\n</tool_response>"


def _mapped_messages(record: dict, adapter: SourceAdapter) -> list[Message]:
    raw_messages = record.get(adapter.messages_field)
    if not isinstance(raw_messages, list):
        raise RejectionError(REJECT_UNMAPPABLE_RECORD, f"no {adapter.messages_field!r} list")
    msgs = []
    for m in raw_messages:
        if not isinstance(m, dict):
            raise RejectionError(REJECT_UNMAPPABLE_RECORD, "message entry is not an object")
        role = adapter.map_role(m.get(adapter.role_field, ""))
        if role is None:
            raise RejectionError(REJECT_UNMAPPABLE_RECORD, f"unknown role {m.get(adapter.role_field)!r}")
        content = m.get(adapter.content_field)
        if content is None:
            raise RejectionError(REJECT_UNMAPPABLE_RECORD, "message has no content")
        if not isinstance(content, str):
            content = json.dumps(content, ensure_ascii=False)
        msgs.append(Message(role=role, content=content))
    return msgs


def _mapped_schemas(record: dict, adapter: SourceAdapter) -> list:
    raw = record.get(adapter.schemas_field)
    if raw is None:
        return []
    if isinstance(raw, str):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError:
            raise RejectionError(REJECT_UNMAPPABLE_RECORD, "schemas field is not parseable JSON")
    if isinstance(raw, dict):
        raw = [raw]
    if not isinstance(raw, list):
        raise RejectionError(REJECT_UNMAPPABLE_RECORD, "schemas field is not a list")
    return raw


def normalize(
    record: dict,
    adapter: SourceAdapter,
    fallback_id: str | None = None,
) -> tuple[Trajectory, list[RepairEntry]]:
    """Normalize one raw record into a format-aligned trajectory.

    Raises :class:`RejectionError` for empty conversations, unmappable
    records, and illegal role orders; the role check runs on the raw roles
    (before tool responses are rewritten into user messages) so corpora with
    genuinely broken turn structure are discarded rather than patched.
    """
    messages = _mapped_messages(record, adapter)

    policy = None
    if adapter.policy_field:
        p = record.get(adapter.policy_field)
        if isinstance(p, str) and p.strip():
            policy = p
    if messages and messages[0].role == "system":
        head, messages = messages[0], messages[1:]
        if policy is None and adapter.system_to_policy and head.content.strip():
            policy = head.content
    if not messages:
        raise RejectionError(REJECT_EMPTY_CONVERSATION, "no conversation messages")

    roles = ["system"] + [m.role for m in messages]
    for prev, nxt in zip(roles, roles[1:]):
        if (prev, nxt) not in ROLE_TRANSITIONS:
            raise RejectionError(REJECT_INVALID_ROLE_ORDER, f"{prev} -> {nxt}")

    schemas, repair_log = validate_schemas(_mapped_schemas(record, adapter))

    body = [
        Message(role="user", content=_wrap_tool_response(m.content)) if m.role == "tool" else m
        for m in messages
    ]

    traj_id = None
    if adapter.id_field and adapter.id_field in record:
        traj_id = str(record[adapter.id_field])
    if not traj_id:
        traj_id = fallback_id or ""
    if not traj_id:
        raise RejectionError(REJECT_UNMAPPABLE_RECORD, "record has no id and no fallback id")

    system = build_system_message(schemas, policy)
    try:
        traj = Trajectory(
            id=traj_id,
            source=adapter.source_id,
            messages=tuple([system] + body),
            schemas=tuple(schemas),
            agent_policy=policy,
        )
    except RoleOrderError as e:  # pragma: no cover - raw-role check precedes this
        raise RejectionError(REJECT_INVALID_ROLE_ORDER, str(e)) from e
    return traj, repair_log


def normalize_stream(records, adapter: SourceAdapter, report: IngestReport | None = None):
    """Yield normalized trajectories from raw records, counting drops.

    Output order equals input order; records are independent, so callers may
    shard this across workers as long as they reassemble in order.
    """
    report = report if report is not None else IngestReport()
    counts = report.counts(adapter.source_id)
    for i, record in enumerate(records):
        counts.raw += 1
        try:
            traj, repairs = normalize(record, adapter, fallback_id=f"{adapter.source_id}:{i:06d}")
        except RejectionError as e:
            if e.reason == REJECT_INVALID_ROLE_ORDER:
                counts.dropped_role_order += 1
            elif e.reason == REJECT_EMPTY_CONVERSATION:
                counts.dropped_empty += 1
            else:
                counts.dropped_unmappable += 1
            continue
        counts.kept += 1
        for entry in repairs:
            if entry.action == "repaired":
                counts.repaired_schema += 1
            elif entry.action in ("deduped", "name_conflict"):
                counts.deduped_schema += 1
            elif entry.action == "dropped":
                counts.dropped_schema += 1
        yield traj
