"""Split trajectories into context/response segments and filter to a clean set.

A segment is the conversation prefix before one assistant message plus that
message as ground truth. Two filters follow: a preliminary pass that drops
segments whose next message carries an unsuccessful tool response, and a
strict pass that checks every ground-truth tool call against the schemas.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .messages import (
    ContentParseError,
    Message,
    ToolCallParseError,
    ToolSchema,
    Trajectory,
    extract_tool_calls,
    parse_content,
)

REASON_UNPARSABLE = "Unparsable"
REASON_UNKNOWN_TOOL = "UnknownTool"
REASON_UNDECLARED_ARGUMENT = "UndeclaredArgument"
REASON_MISSING_REQUIRED = "MissingRequired"
REASON_TYPE_MISMATCH = "TypeMismatch"
REASON_DUPLICATE_CALL = "DuplicateCall"


@dataclass(frozen=True)
class Segment:
    trajectory_id: str
    turn_index: int  # 0-based ordinal of the assistant message
    source: str
    context: tuple = ()
    ground_truth: str = ""

    def __post_init__(self):
        object.__setattr__(self, "context", tuple(self.context))

    @property
    def context_id(self) -> str:
        return f"{self.trajectory_id}:{self.turn_index}"

    def to_dict(self) -> dict:
        return {
            "trajectory_id": self.trajectory_id,
            "turn_index": self.turn_index,
            "source": self.source,
            "context": [m.to_dict() for m in self.context],
            "ground_truth": self.ground_truth,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Segment":
        return cls(
            trajectory_id=d["trajectory_id"],
            turn_index=d["turn_index"],
            source=d["source"],
            context=tuple(Message.from_dict(m) for m in d["context"]),
            ground_truth=d["ground_truth"],
        )


def segment(traj: Trajectory) -> list[Segment]:
    """One segment per assistant message, context being the full prefix."""
    out = []
    turn = 0
    for pos, msg in enumerate(traj.messages):
        if msg.role != "assistant":
            continue
        out.append(
            Segment(
                trajectory_id=traj.id,
                turn_index=turn,
                source=traj.source,
                context=traj.messages[:pos],
                ground_truth=msg.content,
            )
        )
        turn += 1
    return out


@dataclass(frozen=True)
class FailureMarkers:
    """What counts as an unsuccessful tool response.

    The default set covers the failure idioms observable across the source
    corpora: top-level error keys, error-ish status strings, and HTTP-style
    status codes at or above 400. Purely structural; no semantic inference.
    """

    error_keys: tuple = ("error", "errors")
    status_fields: tuple = ("status",)
    status_pattern: str = r"^(error|failed|exception)"
    status_code_fields: tuple = ("status_code",)
    status_code_min: int = 400

    def payload_is_failure(self, payload: str) -> bool:
        try:
            obj = json.loads(payload)
        except json.JSONDecodeError:
            return False
        if not isinstance(obj, dict):
            return False
        if any(k in obj for k in self.error_keys):
            return True
        pat = re.compile(self.status_pattern, re.IGNORECASE)
        for f in self.status_fields:
            v = obj.get(f)
            if isinstance(v, str) and pat.match(v):
                return True
        for f in self.status_code_fields:
            v = obj.get(f)
            if isinstance(v, (int, float)) and not isinstance(v, bool) and v >= self.status_code_min:
                return True
        return False

    def to_dict(self) -> dict:
        return {
            "error_keys": list(self.error_keys),
            "status_fields": list(self.status_fields),
            "status_pattern": self.status_pattern,
            "status_code_fields": list(self.status_code_fields),
            "status_code_min": self.status_code_min,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FailureMarkers":
        return cls(
            error_keys=tuple(d.get("error_keys", ("error", "errors"))),
            status_fields=tuple(d.get("status_fields", ("status",))),
            status_pattern=d.get("status_pattern", r"^(error|failed|exception)"),
            status_code_fields=tuple(d.get("status_code_fields", ("status_code",))),
            status_code_min=d.get("status_code_min", 400),
        )


DEFAULT_MARKERS = FailureMarkers()


def preliminary_filter(
    seg: Segment, following: Message | None, markers: FailureMarkers = DEFAULT_MARKERS
) -> bool:
    """Keep the segment unless the message after its response carries a
    failing tool response. Final segments (no following message) always pass."""
    if following is None:
        return True
    try:
        blocks = parse_content(following.content)
    except ContentParseError:
        return True
    for b in blocks:
        if b.kind == "tool_response" and markers.payload_is_failure(b.payload):
            return False
    return True


# JSON-schema type names, plus the loose aliases real corpora use.
_TYPE_ALIASES = {
    "str": "string",
    "string": "string",
    "int": "integer",
    "integer": "integer",
    "float": "number",
    "number": "number",
    "bool": "boolean",
    "boolean": "boolean",
    "list": "array",
    "tuple": "array",
    "array": "array",
    "dict": "object",
    "object": "object",
    "none": "null",
    "null": "null",
}


def _json_type_of(value) -> str:
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, int):
        return "integer"
    if isinstance(value, float):
        return "number"
    if isinstance(value, str):
        return "string"
    if isinstance(value, list):
        return "array"
    if isinstance(value, dict):
        return "object"
    return "null"


def _type_matches(declared, value) -> bool:
    if declared is None:
        return True
    if isinstance(declared, list):
        return any(_type_matches(d, value) for d in declared)
    decl = _TYPE_ALIASES.get(str(declared).lower())
    if decl is None:
        return True  # unknown declared type: no constraint to check
    actual = _json_type_of(value)
    if decl == "number":
        return actual in ("number", "integer")
    return decl == actual


def strict_validate(seg: Segment, schemas: list[ToolSchema]) -> tuple[bool, list[str]]:
    """Validate every ground-truth tool call against the schema definitions.

    Checks: calls parse, names are declared, every argument key is declared,
    required keys are present, value types match, and no two calls are
    identical. Optional arguments passed as null are treated as absent.
    Returns (keep, reasons); reasons enumerate every failure found.
    """
    by_name = {s.name: s for s in schemas}
    reasons: list[str] = []
    try:
        calls = extract_tool_calls(seg.ground_truth)
    except ToolCallParseError as e:
        return False, [f"{REASON_UNPARSABLE}: {e.reason}"]
    seen = set()
    for call in calls:
        key = call.canonical()
        if key in seen:
            reasons.append(f"{REASON_DUPLICATE_CALL}: {call.name}")
        seen.add(key)
        schema = by_name.get(call.name)
        if schema is None:
            reasons.append(f"{REASON_UNKNOWN_TOOL}: {call.name}")
            continue
        props = schema.parameters.get("properties", {})
        required = schema.parameters.get("required", [])
        args = {
            k: v
            for k, v in call.arguments.items()
            if not (v is None and k not in required)  # optional nulls count as absent
        }
        for k, v in args.items():
            if k not in props:
                reasons.append(f"{REASON_UNDECLARED_ARGUMENT}: {call.name}.{k}")
                continue
            declared = props[k].get("type") if isinstance(props[k], dict) else None
            if not _type_matches(declared, v):
                reasons.append(f"{REASON_TYPE_MISMATCH}: {call.name}.{k}")
        for r in required:
            if r not in args:
                reasons.append(f"{REASON_MISSING_REQUIRED}: {call.name}.{r}")
    return not reasons, reasons


@dataclass
class SegmentDrops:
    segments: int = 0
    kept: int = 0
    dropped_preliminary: int = 0
    dropped_strict: int = 0
    strict_reasons: dict = field(default_factory=dict)


def clean_segments(
    traj: Trajectory, markers: FailureMarkers = DEFAULT_MARKERS, drops: SegmentDrops | None = None
) -> list[Segment]:
    """Segment one trajectory and apply both filters, in order."""
    drops = drops if drops is not None else SegmentDrops()
    kept = []
    for seg in segment(traj):
        drops.segments += 1
        follow_pos = len(seg.context) + 1
        following = traj.messages[follow_pos] if follow_pos < len(traj.messages) else None
        if not preliminary_filter(seg, following, markers):
            drops.dropped_preliminary += 1
            continue
        ok, reasons = strict_validate(seg, list(traj.schemas))
        if not ok:
            drops.dropped_strict += 1
            for r in reasons:
                tag = r.split(":", 1)[0]
                drops.strict_reasons[tag] = drops.strict_reasons.get(tag, 0) + 1
            continue
        drops.kept += 1
        kept.append(seg)
    return kept
