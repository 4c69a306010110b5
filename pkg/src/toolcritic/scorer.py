"""Rule-based scoring of a sampled response against a ground-truth response.

The score lives in [0, 1]. Two disqualifiers zero it outright: a mismatched
tool-call count, and identical duplicate calls on the predicted side. When
neither fires, each ground-truth call earns the best argument similarity among
same-name predicted calls, and the final score is the mean over ground-truth
calls. A response whose tool calls cannot be parsed at all is "unparsable",
which is a distinct outcome, never coerced to 0.
"""

from __future__ import annotations

from dataclasses import dataclass

from .messages import ToolCall, ToolCallParseError, extract_tool_calls

COUNT_MISMATCH = "CountMismatch"
DUPLICATE_PREDICTED = "DuplicatePredicted"


@dataclass(frozen=True)
class CallMatch:
    gt_call_index: int
    matched_name: bool
    best_sim: float


@dataclass(frozen=True)
class ScoreResult:
    score: float | None  # None iff the response was unparsable
    per_call: tuple = ()
    disqualifier: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "per_call", tuple(self.per_call))

    @property
    def is_unparsable(self) -> bool:
        return self.score is None

    def score_json(self):
        """Value used in the scored JSONL rows: a number or "unparsable"."""
        return "unparsable" if self.score is None else self.score


def values_equal(a, b) -> bool:
    """Equality of JSON values with case-insensitive strings at every depth,
    numeric equality across int/float, and deep comparison of containers.

    Booleans are their own type: True never equals 1. Object keys compare
    case-sensitively; only values get the case-insensitive treatment.
    """
    if isinstance(a, str) and isinstance(b, str):
        return a.lower() == b.lower()
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return a == b
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(values_equal(a[k], b[k]) for k in a)
    if a is None and b is None:
        return True
    return False


def sim(a: dict, b: dict) -> float:
    """Ratio of identical key-value pairs to the number of unique keys across
    both argument maps; 1 when both maps are empty."""
    union = set(a) | set(b)
    if not union:
        return 1.0
    identical = sum(1 for k in a if k in b and values_equal(a[k], b[k]))
    return identical / len(union)


def _has_identical_duplicates(calls: list[ToolCall]) -> bool:
    seen = set()
    for c in calls:
        key = c.canonical()
        if key in seen:
            return True
        seen.add(key)
    return False


def score_calls(gt_calls: list[ToolCall], pred_calls: list[ToolCall]) -> ScoreResult:
    """Score already-parsed call lists; both-empty is a perfect 1."""
    if not gt_calls and not pred_calls:
        return ScoreResult(score=1.0)
    if len(gt_calls) != len(pred_calls):
        return ScoreResult(score=0.0, disqualifier=COUNT_MISMATCH)
    if _has_identical_duplicates(pred_calls):
        return ScoreResult(score=0.0, disqualifier=DUPLICATE_PREDICTED)
    matches = []
    for i, gt in enumerate(gt_calls):
        sims = [sim(gt.arguments, p.arguments) for p in pred_calls if p.name == gt.name]
        matches.append(
            CallMatch(gt_call_index=i, matched_name=bool(sims), best_sim=max(sims) if sims else 0.0)
        )
    score = sum(m.best_sim for m in matches) / len(matches)
    return ScoreResult(score=score, per_call=tuple(matches))


def score_response(y_star: str, y_hat: str) -> ScoreResult:
    """Score a sampled response against the ground-truth response.

    ``y_star`` must parse (ground truth is validated upstream); a parse
    failure there propagates. A parse failure in ``y_hat`` yields the
    unparsable result instead of a score.
    """
    gt_calls = extract_tool_calls(y_star)
    try:
        pred_calls = extract_tool_calls(y_hat)
    except ToolCallParseError:
        return ScoreResult(score=None)
    return score_calls(gt_calls, pred_calls)
