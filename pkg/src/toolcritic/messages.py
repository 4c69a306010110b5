"""Core conversation types and the tagged message format.

Assistant messages carry ``<think>``, ``<tool_call>`` and ``<tool_response>``
regions as literal tag-delimited blocks whose payloads are plain text or JSON,
never nested XML. Everything here is immutable and safe to share across
workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

ROLES = ("system", "user", "assistant", "tool")

# Allowed adjacent (previous, next) role pairs; a conversation must also open
# with a system message.
ROLE_TRANSITIONS = frozenset(
    [
        ("system", "user"),
        ("user", "assistant"),
        ("assistant", "user"),
        ("assistant", "tool"),
        ("tool", "assistant"),
    ]
)

BLOCK_TAGS = ("think", "tool_call", "tool_response")


class ContentParseError(ValueError):
    """Malformed tagged content."""


class UnclosedTagError(ContentParseError):
    def __init__(self, tag: str, offset: int):
        super().__init__(f"unclosed <{tag}> at offset {offset}")
        self.tag = tag
        self.offset = offset


class NestedTagError(ContentParseError):
    def __init__(self, tag: str):
        super().__init__(f"nested <{tag}> inside an open <{tag}> block")
        self.tag = tag


class ToolCallParseError(ValueError):
    """The content cannot be parsed into the expected tool-call format."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class RoleOrderError(ValueError):
    """Message roles violate the allowed transition rules."""


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if not isinstance(self.content, str):
            raise TypeError("message content must be a string")

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}

    @classmethod
    def from_dict(cls, d: dict) -> "Message":
        return cls(role=d["role"], content=d["content"])


@dataclass(frozen=True)
class ToolCall:
    """A single function invocation: string name plus a JSON argument map."""

    name: str
    arguments: dict

    def __post_init__(self):
        if not isinstance(self.name, str):
            raise TypeError("tool call name must be a string")
        if not isinstance(self.arguments, dict):
            raise TypeError("tool call arguments must be an object")

    def to_dict(self) -> dict:
        return {"name": self.name, "arguments": self.arguments}

    def canonical(self) -> str:
        """Key-order-independent serialization used for identity checks."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class ToolSchema:
    """A validated function signature.

    ``parameters`` must declare a ``properties`` map and every name in
    ``required`` must appear in it; use :func:`toolcritic.ingest.validate_schemas`
    to repair raw corpus schemas into this shape.
    """

    name: str
    description: str
    parameters: dict

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise ValueError("schema name must be a non-empty string")
        props = self.parameters.get("properties") if isinstance(self.parameters, dict) else None
        if not isinstance(props, dict):
            raise ValueError(f"schema {self.name!r}: parameters must declare a properties map")
        required = self.parameters.get("required", [])
        if not isinstance(required, list):
            raise ValueError(f"schema {self.name!r}: required must be a list")
        missing = [r for r in required if r not in props]
        if missing:
            raise ValueError(f"schema {self.name!r}: required names {missing} not in properties")

    def to_dict(self) -> dict:
        return {"name": self.name, "description": self.description, "parameters": self.parameters}

    @classmethod
    def from_dict(cls, d: dict) -> "ToolSchema":
        return cls(name=d["name"], description=d.get("description", ""), parameters=d["parameters"])

    def canonical_parameters(self) -> str:
        return json.dumps(self.parameters, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class Trajectory:
    """A full multi-role conversation with its tool schemas.

    Invariants enforced at construction: the first message is a system
    message and every adjacent role pair is an allowed transition.
    """

    id: str
    source: str
    messages: tuple = ()
    schemas: tuple = ()
    agent_policy: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))
        object.__setattr__(self, "schemas", tuple(self.schemas))
        if not self.messages:
            raise RoleOrderError("trajectory has no messages")
        if self.messages[0].role != "system":
            raise RoleOrderError(f"first message role is {self.messages[0].role!r}, expected system")
        for prev, nxt in zip(self.messages, self.messages[1:]):
            if (prev.role, nxt.role) not in ROLE_TRANSITIONS:
                raise RoleOrderError(f"illegal role transition {prev.role} -> {nxt.role}")

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "source": self.source,
            "schemas": [s.to_dict() for s in self.schemas],
            "messages": [m.to_dict() for m in self.messages],
        }
        if self.agent_policy is not None:
            d["agent_policy"] = self.agent_policy
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Trajectory":
        return cls(
            id=d["id"],
            source=d["source"],
            messages=tuple(Message.from_dict(m) for m in d["messages"]),
            schemas=tuple(ToolSchema.from_dict(s) for s in d.get("schemas", [])),
            agent_policy=d.get("agent_policy"),
        )


@dataclass(frozen=True)
class Block:
    kind: str  # think | tool_call | tool_response | text
    payload: str


@dataclass(frozen=True)
class ContentBlocks:
    blocks: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))

    def __iter__(self):
        return iter(self.blocks)

    def __len__(self):
        return len(self.blocks)

    def serialize(self) -> str:
        parts = []
        for b in self.blocks:
            if b.kind == "text":
                parts.append(b.payload)
            else:
                parts.append(f"<{b.kind}>{b.payload}</{b.kind}>")
        return "".join(parts)


def parse_content(content: str) -> ContentBlocks:
    """Split message content into tagged blocks plus surrounding text.

    Tag matching is literal string matching, not XML parsing: payloads run
    from an opening tag to the next matching close tag, verbatim. A missing
    close tag raises :class:`UnclosedTagError`; an identical opening tag
    inside an open block raises :class:`NestedTagError`. Stray close tags and
    foreign tags inside a payload are treated as plain text.
    """
    blocks: list[Block] = []
    pos = 0
    n = len(content)
    while pos < n:
        # earliest opening tag from pos
        best = None
        for tag in BLOCK_TAGS:
            i = content.find(f"<{tag}>", pos)
            if i != -1 and (best is None or i < best[1]):
                best = (tag, i)
        if best is None:
            blocks.append(Block("text", content[pos:]))
            break
        tag, start = best
        if start > pos:
            blocks.append(Block("text", content[pos:start]))
        open_end = start + len(tag) + 2
        close = content.find(f"</{tag}>", open_end)
        if close == -1:
            raise UnclosedTagError(tag, start)
        reopen = content.find(f"<{tag}>", open_end)
        if reopen != -1 and reopen < close:
            raise NestedTagError(tag)
        blocks.append(Block(tag, content[open_end:close]))
        pos = close + len(tag) + 3
    return ContentBlocks(tuple(blocks))


def extract_tool_calls(content: str) -> list[ToolCall]:
    """Parse every ``<tool_call>`` block into a :class:`ToolCall`, in order.

    Raises :class:`ToolCallParseError` when the content is malformed or any
    tool_call payload is not a JSON object with a string ``name`` and an
    object ``arguments``; callers treat that as a discard/unparsable outcome.
    """
    try:
        blocks = parse_content(content)
    except ContentParseError as e:
        raise ToolCallParseError(str(e)) from e
    calls = []
    for b in blocks:
        if b.kind != "tool_call":
            continue
        try:
            obj = json.loads(b.payload)
        except json.JSONDecodeError as e:
            raise ToolCallParseError(f"tool_call payload is not valid JSON: {e}") from e
        if not isinstance(obj, dict):
            raise ToolCallParseError("tool_call payload is not a JSON object")
        name = obj.get("name")
        args = obj.get("arguments")
        if not isinstance(name, str):
            raise ToolCallParseError("tool_call payload has no string 'name'")
        if not isinstance(args, dict):
            raise ToolCallParseError("tool_call payload has no object 'arguments'")
        calls.append(ToolCall(name=name, arguments=args))
    return calls


def dump_trajectory(traj: Trajectory) -> str:
    """One deterministic JSONL line per trajectory."""
    return json.dumps(traj.to_dict(), ensure_ascii=False)


def load_trajectory(line: str) -> Trajectory:
    return Trajectory.from_dict(json.loads(line))
