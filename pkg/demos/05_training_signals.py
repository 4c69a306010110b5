"""Walkthrough: verifiable rewards and group-normalized advantages.

These are the signals an RL trainer consumes: a binary reward per rollout
(did the judge's extracted choice match the hidden answer position) and
within-group normalized advantages. The same callables ship through the
bridge package for trainers that only want the reward function.

Run with: python3 demos/05_training_signals.py
"""

import random

from toolcritic import Message, PairwiseSample, choice_reward, group_advantages, render_pairwise

sample = PairwiseSample(
    pair_id="demo#p0",
    context_id="demo:0",
    source="synthetic",
    context=(Message("system", "# Tools ..."), Message("user", "Convert 100 USD to EUR.")),
    y_star='<tool_call>\n{"name": "convert_currency", "arguments": {"amount": 100, "from_code": "USD", "to_code": "EUR"}}\n</tool_call>',
    y_plus='<tool_call>\n{"name": "convert_currency", "arguments": {"amount": 100, "from_code": "USD", "to_code": "EUR"}}\n</tool_call>',
    y_minus='<tool_call>\n{"name": "convert_currency", "arguments": {"amount": 100, "from_code": "USD", "to_code": "JPY"}}\n</tool_call>',
    s_plus=1.0,
    s_minus=2 / 3,
    i_preference=1.0 - 2 / 3,
    s_complex=4,
    bin_idx=3,
)

rng = random.Random(13)
query = render_pairwise(sample, mode="think", rng=rng)
print(f"rendered query for {query.pair_id}: chosen response sits in slot {query.answer}")

rollouts = [
    f"<think>slot {query.answer} matches the request</think>\n<choice>\n{query.answer}\n</choice>",
    "<choice>\n1\n</choice>",
    "<choice>\n2\n</choice>",
    "The better answer is clearly the first one.",  # no tags: reward 0
    f"<choice>{query.answer}</choice>",
    "<choice>\n2\n</choice>",
    f"<choice>\n{query.answer}\n</choice>",
    "<choice>3</choice>",
]
rewards = [choice_reward(query.answer, r) for r in rollouts]
print(f"rewards for a group of {len(rollouts)} rollouts: {rewards}")

advantages = group_advantages(rewards)
print("advantages:", [round(a, 4) for a in advantages])
print("mean ~ 0, population std ~ 1 whenever the rewards vary")

print("\nall-equal groups get zero advantages:", group_advantages([1, 1, 1, 1]))

# The bridge exposes the same three callables for external trainers.
try:
    import toolcritic_bridge as bridge
except ImportError:
    print("\nbridge package not installed; `pip install -e bridge/` to try it")
else:
    print(f"\nvia bridge {bridge.version()}:")
    print("  bridge_score ->", bridge.bridge_score(sample.y_star, sample.y_minus))
    print("  bridge_reward ->", bridge.bridge_reward(query.answer, rollouts[0]))
    print("  bridge_advantages ->", [round(a, 4) for a in bridge.bridge_advantages(rewards)])
