"""Preference-pair construction and balanced multi-dimensional sampling.

Pipeline: scored responses are grouped per context, contexts that are too
easy (every score 1) or too noisy (no score 1) are dropped, every ordered
same-context response pair with a strictly higher chosen score becomes a
candidate, and the final subset is drawn group-by-group over (source,
intensity bin) with a greedy quota sweep that prefers complex tasks.
"""

from __future__ import annotations

import bisect
import random
from dataclasses import dataclass, field, replace

from .messages import Message, extract_tool_calls
from .scorer import ScoreResult


class InsufficientDataError(ValueError):
    """The candidate pool is smaller than the requested sample size."""


@dataclass(frozen=True)
class BinSpec:
    """Half-open intensity intervals (lo, hi] covering (0, 1]."""

    edges: tuple = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(float(e) for e in self.edges))
        if len(self.edges) < 2 or self.edges[0] != 0.0 or self.edges[-1] != 1.0:
            raise ValueError("bin edges must run from 0.0 to 1.0")
        if any(a >= b for a, b in zip(self.edges, self.edges[1:])):
            raise ValueError("bin edges must be strictly increasing")

    def index_of(self, value: float) -> int:
        if not 0.0 < value <= 1.0:
            raise ValueError(f"intensity {value} outside (0, 1]")
        return bisect.bisect_left(self.edges, value, 1) - 1

    def bounds(self, idx: int) -> tuple:
        return self.edges[idx], self.edges[idx + 1]

    def __len__(self):
        return len(self.edges) - 1


DEFAULT_BINS = BinSpec()
DEFAULT_COMPLEXITY_CAP = 50


@dataclass(frozen=True)
class CandidateQuad:
    """One scored response kept after difficulty-aware down-sampling."""

    context_id: str
    source: str
    context: tuple
    y_star: str
    y_hat: str
    score: float
    model_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "context", tuple(self.context))
        if not isinstance(self.score, (int, float)):
            raise TypeError("quad score must be numeric; unparsable responses are excluded upstream")


@dataclass(frozen=True)
class PairwiseSample:
    pair_id: str
    context_id: str
    source: str
    context: tuple
    y_star: str
    y_plus: str
    y_minus: str
    s_plus: float
    s_minus: float
    i_preference: float
    s_complex: int
    bin_idx: int

    def __post_init__(self):
        object.__setattr__(self, "context", tuple(self.context))
        if not self.s_plus > self.s_minus:
            raise ValueError("chosen score must exceed rejected score")
        if self.i_preference != self.s_plus - self.s_minus:
            raise ValueError("preference intensity must equal the score difference exactly")
        if self.s_complex < 0:
            raise ValueError("complexity must be non-negative")

    def to_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "context_id": self.context_id,
            "source": self.source,
            "context": [m.to_dict() for m in self.context],
            "y_star": self.y_star,
            "y_plus": self.y_plus,
            "y_minus": self.y_minus,
            "s_plus": self.s_plus,
            "s_minus": self.s_minus,
            "i_preference": self.i_preference,
            "s_complex": self.s_complex,
            "bin_idx": self.bin_idx,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PairwiseSample":
        return cls(
            pair_id=d["pair_id"],
            context_id=d["context_id"],
            source=d["source"],
            context=tuple(Message.from_dict(m) for m in d["context"]),
            y_star=d["y_star"],
            y_plus=d["y_plus"],
            y_minus=d["y_minus"],
            s_plus=d["s_plus"],
            s_minus=d["s_minus"],
            i_preference=d["i_preference"],
            s_complex=d["s_complex"],
            bin_idx=d["bin_idx"],
        )


@dataclass(frozen=True)
class ScoredResponse:
    context_id: str
    model_id: str
    response: str
    result: ScoreResult


@dataclass(frozen=True)
class ContextGroup:
    """All numeric-scored responses sampled for one context."""

    context_id: str
    source: str
    context: tuple
    y_star: str
    responses: tuple  # of (model_id, y_hat, score)

    def __post_init__(self):
        object.__setattr__(self, "context", tuple(self.context))
        object.__setattr__(self, "responses", tuple(self.responses))


def build_candidate_pool(groups) -> list[CandidateQuad]:
    """Difficulty-aware down-sampling over per-context response groups.

    Groups where every response scores 1 carry no useful variation and are
    dropped; groups where nothing scores 1 are treated as noisy and dropped
    too. Survivors flatten into candidate quads in input order.
    """
    pool: list[CandidateQuad] = []
    for g in groups:
        scores = [s for _, _, s in g.responses]
        if not scores:
            continue
        if all(s == 1.0 for s in scores):
            continue
        if not any(s == 1.0 for s in scores):
            continue
        for model_id, y_hat, score in g.responses:
            pool.append(
                CandidateQuad(
                    context_id=g.context_id,
                    source=g.source,
                    context=g.context,
                    y_star=g.y_star,
                    y_hat=y_hat,
                    score=score,
                    model_id=model_id,
                )
            )
    return pool


def complexity_score(y_star: str) -> int:
    """Ground-truth call count plus total argument count."""
    calls = extract_tool_calls(y_star)
    return len(calls) + sum(len(c.arguments) for c in calls)


def build_pairs(
    pool: list[CandidateQuad],
    bins: BinSpec = DEFAULT_BINS,
    complexity_cap: int = DEFAULT_COMPLEXITY_CAP,
    per_context_cap: int | None = None,
) -> list[PairwiseSample]:
    """Every ordered same-context pair with a strictly higher chosen score.

    Over-complicated contexts (complexity above the cap) are excluded; the
    optional per-context cap guards pathological corpora where one context
    would otherwise explode combinatorially.
    """
    by_context: dict[str, list[CandidateQuad]] = {}
    for q in pool:
        by_context.setdefault(q.context_id, []).append(q)

    samples: list[PairwiseSample] = []
    for context_id, quads in by_context.items():
        s_complex = complexity_score(quads[0].y_star)
        if s_complex > complexity_cap:
            continue
        seq = 0
        for plus in quads:
            for minus in quads:
                if plus.score <= minus.score:
                    continue
                if per_context_cap is not None and seq >= per_context_cap:
                    break
                intensity = plus.score - minus.score
                samples.append(
                    PairwiseSample(
                        pair_id=f"{context_id}#p{seq}",
                        context_id=context_id,
                        source=plus.source,
                        context=plus.context,
                        y_star=plus.y_star,
                        y_plus=plus.y_hat,
                        y_minus=minus.y_hat,
                        s_plus=plus.score,
                        s_minus=minus.score,
                        i_preference=intensity,
                        s_complex=s_complex,
                        bin_idx=bins.index_of(intensity),
                    )
                )
                seq += 1
            if per_context_cap is not None and seq >= per_context_cap:
                break
    return samples


def bmds_sample(pool: list[PairwiseSample], bins: BinSpec, n: int) -> list[PairwiseSample]:
    """Greedy balanced sampling over (source, intensity bin) groups.

    Groups are filled smallest-first; once the smallest remaining group
    exceeds the running per-group average, the remaining quota is spread
    evenly with the remainder going to the last-indexed (largest) groups.
    Within a group the highest-complexity samples win, ties broken by stable
    input order, so the whole procedure is deterministic.
    """
    if len(pool) < n:
        raise InsufficientDataError(f"pool has {len(pool)} samples, need {n}")

    binned = [
        s if s.bin_idx == bins.index_of(s.i_preference) else replace(s, bin_idx=bins.index_of(s.i_preference))
        for s in pool
    ]

    groups: dict[tuple, list[PairwiseSample]] = {}
    for s in binned:
        groups.setdefault((s.source, s.bin_idx), []).append(s)
    for members in groups.values():
        members.sort(key=lambda s: -s.s_complex)  # stable: input order breaks ties

    ordered = sorted(groups.values(), key=len)  # ascending size, stable
    quotas = [0] * len(ordered)
    remaining = n
    k = 0
    while k < len(ordered) and remaining > 0:
        m = len(ordered) - k
        n_avg = remaining // m
        if len(ordered[k]) <= n_avg:
            quotas[k] = len(ordered[k])
            remaining -= quotas[k]
            k += 1
        else:
            q, r = divmod(remaining, m)
            for i in range(k, len(ordered)):
                quotas[i] = q
            for i in range(r):
                quotas[len(ordered) - 1 - i] += 1
            break

    out: list[PairwiseSample] = []
    for members, quota in zip(ordered, quotas):
        out.extend(members[:quota])
    return out


def split_dataset(
    samples: list[PairwiseSample], holdout: int, seed: int
) -> tuple[list[PairwiseSample], list[PairwiseSample]]:
    """Seeded train/validation split, validation stratified by (source, bin).

    Per-group validation counts follow the groups' share of the pool
    (largest-remainder rounding), so the holdout mirrors the sampled
    distribution. Both outputs preserve input order.
    """
    if holdout >= len(samples) and holdout > 0:
        raise ValueError("holdout must be smaller than the dataset")
    if holdout <= 0:
        return list(samples), []

    by_key: dict[tuple, list[int]] = {}
    for i, s in enumerate(samples):
        by_key.setdefault((s.source, s.bin_idx), []).append(i)

    total = len(samples)
    keys = sorted(by_key)
    shares = [(holdout * len(by_key[k])) / total for k in keys]
    counts = [int(x) for x in shares]
    leftover = holdout - sum(counts)
    # hand the remainder to the largest fractional parts, key order on ties
    order = sorted(range(len(keys)), key=lambda i: (-(shares[i] - counts[i]), i))
    for i in order:
        if leftover <= 0:
            break
        if counts[i] < len(by_key[keys[i]]):
            counts[i] += 1
            leftover -= 1
    # distribution exhausted in fractional order; top up anywhere with room
    i = 0
    while leftover > 0 and i < len(keys):
        room = len(by_key[keys[i]]) - counts[i]
        take = min(room, leftover)
        counts[i] += take
        leftover -= take
        i += 1

    rng = random.Random(seed)
    val_idx: set[int] = set()
    for k, c in zip(keys, counts):
        if c:
            val_idx.update(rng.sample(by_key[k], c))
    train = [s for i, s in enumerate(samples) if i not in val_idx]
    validation = [s for i, s in enumerate(samples) if i in val_idx]
    return train, validation
