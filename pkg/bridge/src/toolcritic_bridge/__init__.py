"""Reward-function bindings for RL training frameworks.

Exposes exactly three stateless callables plus version(), all delegating to
the toolcritic library so scoring semantics have a single source of truth.
Only text and plain numbers cross the boundary; no tensors, no training
utilities. Callables are safe under the host runtime's threading.
"""

from __future__ import annotations

__version__ = "0.1.0"

__all__ = ["bridge_score", "bridge_reward", "bridge_advantages", "version", "BridgeError"]

_lib = None


class BridgeError(RuntimeError):
    """The bridge could not bind to the scoring library."""


def _load():
    global _lib
    if _lib is None:
        try:
            import toolcritic
        except ImportError as e:
            raise BridgeError(f"bridge is not initialized: toolcritic is not importable ({e})") from e
        if toolcritic.__version__ != __version__:
            raise BridgeError(
                f"version skew: bridge {__version__} vs toolcritic {toolcritic.__version__}"
            )
        _lib = toolcritic
    return _lib


def version() -> str:
    """The bound library version; identical for bridge and library."""
    return _load().__version__


def bridge_score(y_star: str, y_hat: str):
    """Rule-based score of a sampled response against ground truth.

    Returns a float in [0, 1], or the string "unparsable" when the sampled
    response cannot be parsed into tool calls.
    """
    return _load().score_response(y_star, y_hat).score_json()


def bridge_reward(answer: str, rollout: str) -> int:
    """Binary reward: 1 iff the rollout's extracted choice equals the answer."""
    return _load().choice_reward(answer, rollout)


def bridge_advantages(rewards: list) -> list:
    """Group-normalized advantages for one rollout group (size >= 2)."""
    return _load().group_advantages(list(rewards))
