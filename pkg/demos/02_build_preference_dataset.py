"""Walkthrough: the full preference-data pipeline on the synthetic corpus.

Spins up the scripted mock endpoint in-process, then runs every stage:
normalize -> segment -> sample-responses -> score -> build-pairs -> bmds ->
render. Everything is seeded, so rerunning reproduces the files byte for
byte.

Run with: python3 demos/02_build_preference_dataset.py
"""

import json
import tempfile
from pathlib import Path

from toolcritic import synth
from toolcritic.cli import run_pipeline
from toolcritic.mockserver import make_server, start_in_thread
from toolcritic.util import read_jsonl

work = Path(tempfile.mkdtemp(prefix="toolcritic-demo-"))
print(f"working in {work}\n")

# 1. a 50-task synthetic corpus in the raw messages/tools record shape
raw = work / "raw.jsonl"
synth.write_raw_corpus(raw, n_tasks=50, seed=20240601)

# 2. a scripted endpoint that answers with deterministic variants of the true
#    next assistant message (exact / perturbed / wrong count / text only)
server = make_server(work / "trajectories.jsonl")
start_in_thread(server)
host, port = server.server_address
endpoints = [
    {"model_id": m, "base_url": f"http://{host}:{port}/v1", "timeout": 30}
    for m in ("mock-exact", "mock-a", "mock-b", "mock-c")
]
(work / "endpoints.json").write_text(json.dumps(endpoints))

config = {
    "seed": 7,
    "source": "synthetic",
    "endpoints": str(work / "endpoints.json"),
    "cache_dir": str(work / "cache"),
    "target_n": 200,
    "complexity_cap": 50,
    "mode": "think",
    "paths": {
        "raw": str(raw),
        "trajectories": str(work / "trajectories.jsonl"),
        "segments": str(work / "segments.jsonl"),
        "responses": str(work / "responses.jsonl"),
        "scored": str(work / "scored.jsonl"),
        "pairs": str(work / "pairs.jsonl"),
        "sampled": str(work / "sampled.jsonl"),
        "queries": str(work / "queries.jsonl"),
        "reports_dir": str(work / "reports"),
    },
}

for report in run_pipeline(config, "all"):
    print(f"{report['stage']:17s} in={report.get('input_count'):4} out={report.get('output_count'):4} drops={report['drops']}")
server.shutdown()

# What came out: pairwise samples with scores, intensity, and complexity.
sampled = list(read_jsonl(work / "sampled.jsonl"))
print(f"\nsampled {len(sampled)} preference pairs; first one:")
first = sampled[0]
print(f"  context={first['context_id']} s+={first['s_plus']:.2f} s-={first['s_minus']:.2f} "
      f"intensity={first['i_preference']:.2f} complexity={first['s_complex']} bin={first['bin_idx']}")

# Intensity-bin histogram: the balanced sampler spreads pairs across bins.
hist = {}
for row in sampled:
    hist[row["bin_idx"]] = hist.get(row["bin_idx"], 0) + 1
print("\nintensity bins:", dict(sorted(hist.items())))

# Rendered judge queries carry the hidden answer position for training.
queries = list(read_jsonl(work / "queries.jsonl"))
swapped = sum(q["swapped"] for q in queries)
print(f"\nrendered {len(queries)} queries, {swapped} with the chosen response in slot 2")
print("\nquery excerpt:")
print("\n".join(queries[0]["query_text"].splitlines()[:4]))
print(f"... expected answer: {queries[0]['answer']}")
