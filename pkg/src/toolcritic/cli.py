"""Command-line entry point: individual pipeline stages plus a config-driven
orchestrator.

Every stage reads and writes JSONL, emits a JSON report with input/output
counts and drop reasons, and derives any randomness from the single root
seed, so reruns with a warm cache are byte-identical. Exit codes: 0 ok,
1 stage failure, 2 config or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from pathlib import Path

from . import synth
from .bench import (
    build_bench_pairs,
    bon_select,
    endpoint_judge,
    endpoint_policy,
    evaluate_pairwise,
    self_correct,
)
from .client import ChatClient, EndpointConfig, load_endpoints
from .critique import GroupTooSmallError, group_advantages, render_pairwise
from .ingest import IngestReport, SourceAdapter, get_adapter, normalize_stream
from .messages import Message, Trajectory
from .pairs import (
    BinSpec,
    ContextGroup,
    DEFAULT_BINS,
    DEFAULT_COMPLEXITY_CAP,
    InsufficientDataError,
    PairwiseSample,
    bmds_sample,
    build_candidate_pool,
    build_pairs,
    split_dataset,
)
from .segmenter import DEFAULT_MARKERS, FailureMarkers, Segment, SegmentDrops, clean_segments
from .util import derive_seed, read_jsonl, write_jsonl

log = logging.getLogger("toolcritic")

EXIT_OK = 0
EXIT_STAGE = 1
EXIT_CONFIG = 2

STAGES = ("normalize", "segment", "sample-responses", "score", "build-pairs", "bmds", "render")


class ConfigError(ValueError):
    pass


def _setup_logging(fmt: str):
    handler = logging.StreamHandler(sys.stderr)
    if fmt == "json":
        class JsonFormatter(logging.Formatter):
            def format(self, record):
                return json.dumps(
                    {"level": record.levelname.lower(), "name": record.name, "message": record.getMessage()},
                    ensure_ascii=False,
                )

        handler.setFormatter(JsonFormatter())
    else:
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    logging.basicConfig(level=logging.INFO, handlers=[handler], force=True)


def _write_report(path, report: dict):
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(report, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    log.info("stage %s: %s", report.get("stage"), json.dumps(report, ensure_ascii=False))


def _load_markers(path) -> FailureMarkers:
    if not path:
        return DEFAULT_MARKERS
    return FailureMarkers.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _load_bins(spec) -> BinSpec:
    if spec in (None, "default"):
        return DEFAULT_BINS
    if isinstance(spec, str):
        spec = [float(x) for x in spec.split(",")]
    return BinSpec(edges=tuple(spec))


# ---------------------------------------------------------------------------
# individual stages


def stage_normalize(source, in_path, out_path, report_path=None, adapter_path=None) -> dict:
    if adapter_path:
        adapter = SourceAdapter.from_dict(json.loads(Path(adapter_path).read_text(encoding="utf-8")))
    else:
        adapter = get_adapter(source)
    report = IngestReport()
    kept = normalize_stream(read_jsonl(in_path), adapter, report)
    n = write_jsonl(out_path, (t.to_dict() for t in kept))
    report.check()
    counts = report.counts(adapter.source_id)
    out = {
        "stage": "normalize",
        "input_count": counts.raw,
        "output_count": n,
        "drops": {
            "role_order": counts.dropped_role_order,
            "empty": counts.dropped_empty,
            "unmappable": counts.dropped_unmappable,
        },
        "schemas": {
            "repaired": counts.repaired_schema,
            "deduped": counts.deduped_schema,
            "dropped": counts.dropped_schema,
        },
        "per_source": report.to_dict(),
    }
    _write_report(report_path, out)
    return out


def stage_segment(in_path, out_path, markers_path=None, report_path=None) -> dict:
    markers = _load_markers(markers_path)
    drops = SegmentDrops()
    trajectories = 0

    def rows():
        nonlocal trajectories
        for row in read_jsonl(in_path):
            trajectories += 1
            for seg in clean_segments(Trajectory.from_dict(row), markers, drops):
                yield seg.to_dict()

    n = write_jsonl(out_path, rows())
    out = {
        "stage": "segment",
        "input_count": trajectories,
        "segments": drops.segments,
        "output_count": n,
        "drops": {
            "preliminary": drops.dropped_preliminary,
            "strict": drops.dropped_strict,
            "strict_reasons": dict(sorted(drops.strict_reasons.items())),
        },
    }
    _write_report(report_path, out)
    return out


def stage_sample(segments_path, endpoints_path, out_path, cache_dir=None,
                 n_per_endpoint: int = 1, report_path=None) -> dict:
    endpoints = load_endpoints(endpoints_path)
    segments = [Segment.from_dict(r) for r in read_jsonl(segments_path)]
    absent = 0
    rows = []
    with ChatClient(cache_dir=cache_dir) as client:
        for seg in segments:
            for record in client.sample(list(seg.context), endpoints, n_per_endpoint):
                row = {"context_id": seg.context_id, **record}
                if record["content"] is None:
                    absent += 1
                rows.append(row)
    n = write_jsonl(out_path, rows)
    out = {
        "stage": "sample-responses",
        "input_count": len(segments),
        "output_count": n,
        "drops": {"absent_responses": absent},
    }
    _write_report(report_path, out)
    return out


def stage_score(segments_path, responses_path, out_path, report_path=None) -> dict:
    from .scorer import score_response

    ground_truth = {}
    for row in read_jsonl(segments_path):
        seg = Segment.from_dict(row)
        ground_truth[seg.context_id] = seg.ground_truth

    scored = unparsable = absent = 0
    rows = []
    responses = 0
    for row in read_jsonl(responses_path):
        responses += 1
        if row.get("content") is None:
            absent += 1
            continue
        y_star = ground_truth.get(row["context_id"])
        if y_star is None:
            raise ConfigError(f"response for unknown context {row['context_id']}")
        result = score_response(y_star, row["content"])
        out_row = {
            "context_id": row["context_id"],
            "model_id": row["model_id"],
            "response": row["content"],
            "score": result.score_json(),
        }
        if result.disqualifier:
            out_row["disqualifier"] = result.disqualifier
        if result.is_unparsable:
            unparsable += 1
        else:
            scored += 1
        rows.append(out_row)
    n = write_jsonl(out_path, rows)
    out = {
        "stage": "score",
        "input_count": responses,
        "output_count": n,
        "drops": {"absent": absent},
        "unparsable": unparsable,
        "numeric": scored,
    }
    _write_report(report_path, out)
    return out


def stage_build_pairs(scored_path, segments_path, out_path, complexity_cap=DEFAULT_COMPLEXITY_CAP,
                      bins=None, per_context_cap=None, report_path=None) -> dict:
    bins = _load_bins(bins)
    segments = {}
    order = []
    for row in read_jsonl(segments_path):
        seg = Segment.from_dict(row)
        segments[seg.context_id] = seg
        order.append(seg.context_id)

    responses = {}
    for row in read_jsonl(scored_path):
        if row["score"] == "unparsable":
            continue
        responses.setdefault(row["context_id"], []).append(
            (row["model_id"], row["response"], float(row["score"]))
        )

    groups = []
    for context_id in order:
        if context_id not in responses:
            continue
        seg = segments[context_id]
        groups.append(
            ContextGroup(
                context_id=context_id,
                source=seg.source,
                context=seg.context,
                y_star=seg.ground_truth,
                responses=tuple(responses[context_id]),
            )
        )
    pool = build_candidate_pool(groups)
    pairs = build_pairs(pool, bins=bins, complexity_cap=complexity_cap, per_context_cap=per_context_cap)
    n = write_jsonl(out_path, (p.to_dict() for p in pairs))
    kept_contexts = {q.context_id for q in pool}
    out = {
        "stage": "build-pairs",
        "input_count": len(groups),
        "output_count": n,
        "drops": {"contexts_filtered": len(groups) - len(kept_contexts)},
        "candidate_quads": len(pool),
    }
    _write_report(report_path, out)
    return out


def stage_bmds(pairs_path, out_path, n: int, bins=None, seed: int = 0, holdout: int = 0,
               validation_out=None, report_path=None) -> dict:
    bins = _load_bins(bins)
    pool = [PairwiseSample.from_dict(r) for r in read_jsonl(pairs_path)]
    sampled = bmds_sample(pool, bins, n)
    if holdout:
        train, validation = split_dataset(sampled, holdout, seed=derive_seed(seed, "split"))
        write_jsonl(out_path, (p.to_dict() for p in train))
        if validation_out:
            write_jsonl(validation_out, (p.to_dict() for p in validation))
        written = len(train)
    else:
        written = write_jsonl(out_path, (p.to_dict() for p in sampled))
        validation = []
    out = {
        "stage": "bmds",
        "input_count": len(pool),
        "output_count": written,
        "validation_count": len(validation),
        "drops": {"not_sampled": len(pool) - n},
    }
    _write_report(report_path, out)
    return out


def stage_render(pairs_path, out_path, mode: str, seed: int, report_path=None) -> dict:
    count = 0
    swapped = 0

    def rows():
        nonlocal count, swapped
        for row in read_jsonl(pairs_path):
            sample = PairwiseSample.from_dict(row)
            rng = random.Random(derive_seed(seed, "render", sample.pair_id))
            query = render_pairwise(sample, mode, rng)
            count += 1
            swapped += query.swapped
            yield query.to_dict()

    n = write_jsonl(out_path, rows())
    out = {
        "stage": "render",
        "input_count": count,
        "output_count": n,
        "swapped": swapped,
        "drops": {},
    }
    _write_report(report_path, out)
    return out


def stage_advantage(rewards_path, out_path, group_size: int, report_path=None) -> dict:
    rows = list(read_jsonl(rewards_path))
    if group_size < 2:
        raise ConfigError("group size must be at least 2")
    if len(rows) % group_size:
        raise GroupTooSmallError(f"{len(rows)} rewards do not divide into groups of {group_size}")
    out_rows = []
    for start in range(0, len(rows), group_size):
        chunk = rows[start : start + group_size]
        advantages = group_advantages([float(r["reward"]) for r in chunk])
        for row, adv in zip(chunk, advantages):
            out_rows.append({**row, "advantage": adv})
    n = write_jsonl(out_path, out_rows)
    out = {"stage": "advantage", "input_count": len(rows), "output_count": n, "drops": {}}
    _write_report(report_path, out)
    return out


# ---------------------------------------------------------------------------
# pipeline orchestrator


def _require(config: dict, key: str):
    if key not in config:
        raise ConfigError(f"config is missing {key!r}")
    return config[key]


def validate_config(config: dict) -> dict:
    paths = _require(config, "paths")
    _require(config, "seed")
    _require(config, "source")
    needed = ["raw", "trajectories", "segments", "responses", "scored", "pairs", "sampled", "queries"]
    missing = [k for k in needed if k not in paths]
    if missing:
        raise ConfigError(f"config paths missing {missing}")
    values = [paths[k] for k in needed]
    if len(set(values)) != len(values):
        raise ConfigError("stage paths must be distinct")
    return config


def run_pipeline(config: dict, stage: str = "all", cache_dir=None) -> list[dict]:
    config = validate_config(config)
    paths = config["paths"]
    seed = config["seed"]
    reports_dir = paths.get("reports_dir")

    def report_path(name):
        return str(Path(reports_dir) / f"{name}.json") if reports_dir else None

    def run_stage(name):
        if name == "normalize":
            return stage_normalize(
                config["source"], paths["raw"], paths["trajectories"],
                report_path("normalize"), config.get("adapter"),
            )
        if name == "segment":
            return stage_segment(
                paths["trajectories"], paths["segments"], config.get("failure_markers"), report_path("segment"),
            )
        if name == "sample-responses":
            return stage_sample(
                paths["segments"], _require(config, "endpoints"), paths["responses"],
                cache_dir or config.get("cache_dir"), config.get("n_per_endpoint", 1),
                report_path("sample-responses"),
            )
        if name == "score":
            return stage_score(paths["segments"], paths["responses"], paths["scored"], report_path("score"))
        if name == "build-pairs":
            return stage_build_pairs(
                paths["scored"], paths["segments"], paths["pairs"],
                config.get("complexity_cap", DEFAULT_COMPLEXITY_CAP), config.get("bins"),
                config.get("per_context_cap"), report_path("build-pairs"),
            )
        if name == "bmds":
            return stage_bmds(
                paths["pairs"], paths["sampled"], _require(config, "target_n"), config.get("bins"),
                seed, config.get("holdout", 0), paths.get("validation"), report_path("bmds"),
            )
        if name == "render":
            return stage_render(
                paths["sampled"], paths["queries"], config.get("mode", "think"), seed, report_path("render"),
            )
        raise ConfigError(f"unknown stage {name!r}")

    names = list(STAGES) if stage == "all" else [stage]
    return [run_stage(name) for name in names]


# ---------------------------------------------------------------------------
# bench subcommands


def _judge_from_config(path, cache_dir=None):
    cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    endpoint = EndpointConfig.from_dict(cfg)
    client = ChatClient(cache_dir=cache_dir)
    return client, endpoint


def cmd_bench_build_pairs(args) -> int:
    tasks = list(read_jsonl(args.tasks))
    pairs, skipped = build_bench_pairs(tasks, args.turn_mode)
    write_jsonl(args.out, (p.to_dict() for p in pairs))
    _write_report(args.report, {
        "stage": "bench-build-pairs",
        "input_count": len(tasks),
        "output_count": len(pairs),
        "drops": {"no_failure": len(skipped)},
        "skipped_tasks": skipped,
    })
    return EXIT_OK


def cmd_bench_eval(args) -> int:
    from .bench import BenchPair

    pairs = [BenchPair.from_dict(r) for r in read_jsonl(args.pairs)]
    client, endpoint = _judge_from_config(args.judge, args.cache_dir)
    with client:
        report, records = evaluate_pairwise(endpoint_judge(client, endpoint), pairs, args.mode)
    if args.records:
        write_jsonl(args.records, (r.to_dict() for r in records))
    Path(args.report).parent.mkdir(parents=True, exist_ok=True)
    Path(args.report).write_text(json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    log.info("bench eval: %s", json.dumps(report.to_dict(), ensure_ascii=False))
    return EXIT_OK


def cmd_bench_bon(args) -> int:
    client, endpoint = _judge_from_config(args.judge, args.cache_dir)
    rows = []
    with client:
        judge = endpoint_judge(client, endpoint)
        for row in read_jsonl(args.candidates):
            context = [Message.from_dict(m) for m in row["context"]]
            result = bon_select(judge, context, row["candidates"][: args.n], max_candidates=args.n)
            rows.append({
                "task_id": row.get("task_id"),
                "index": result.index,
                "flagged": result.flagged,
                "reason": result.reason,
                "selected": row["candidates"][result.index - 1],
            })
    write_jsonl(args.out, rows)
    return EXIT_OK


def cmd_bench_self_correct(args) -> int:
    policy_client, policy_ep = _judge_from_config(args.policy, args.cache_dir)
    critic_client, critic_ep = _judge_from_config(args.critic, args.cache_dir)
    editor_client, editor_ep = _judge_from_config(args.editor, args.cache_dir)
    rows = []
    with policy_client, critic_client, editor_client:
        policy = endpoint_policy(policy_client, policy_ep)
        critic = endpoint_judge(critic_client, critic_ep)
        editor = endpoint_judge(editor_client, editor_ep)
        for row in read_jsonl(args.tasks):
            context = [Message.from_dict(m) for m in row["context"]]
            result = self_correct(policy, critic, editor, context)
            rows.append({
                "task_id": row.get("task_id"),
                "final": result.final,
                "original": result.original,
                "critique": result.critique,
                "tokens": result.tokens,
                "flags": list(result.flags),
            })
    write_jsonl(args.out, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toolcritic", description=__doc__)
    parser.add_argument("--log-format", choices=("text", "json"), default="text")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("normalize", help="adapt a raw corpus into trajectories")
    p.add_argument("--source", required=True)
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.add_argument("--adapter", help="adapter config JSON overriding the registry")

    p = sub.add_parser("segment", help="split trajectories and filter segments")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--failure-markers")
    p.add_argument("--report")

    p = sub.add_parser("sample-responses", help="sample candidate responses per context")
    p.add_argument("--segments", required=True)
    p.add_argument("--endpoints", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--cache-dir")
    p.add_argument("--n-per-endpoint", type=int, default=1)
    p.add_argument("--report")

    p = sub.add_parser("score", help="rule-based scoring of sampled responses")
    p.add_argument("--segments", required=True)
    p.add_argument("--responses", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")

    p = sub.add_parser("build-pairs", help="construct the candidate pairwise pool")
    p.add_argument("--scored", required=True)
    p.add_argument("--segments", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--complexity-cap", type=int, default=DEFAULT_COMPLEXITY_CAP)
    p.add_argument("--per-context-cap", type=int)
    p.add_argument("--bins", default="default")
    p.add_argument("--report")

    p = sub.add_parser("bmds", help="balanced multi-dimensional sampling")
    p.add_argument("--pairs", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--bins", default="default")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--holdout", type=int, default=0)
    p.add_argument("--validation-out")
    p.add_argument("--report")

    p = sub.add_parser("render", help="render pairwise critique queries")
    p.add_argument("--pairs", required=True)
    p.add_argument("--mode", choices=("think", "no_think"), default="think")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")

    p = sub.add_parser("advantage", help="group-normalized advantages from rewards")
    p.add_argument("--rewards", required=True)
    p.add_argument("--group-size", type=int, default=8)
    p.add_argument("--out", required=True)
    p.add_argument("--report")

    p = sub.add_parser("run", help="run pipeline stages from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--stage", default="all", choices=("all",) + STAGES)
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--cache-dir")

    bench = sub.add_parser("bench", help="benchmark construction and evaluation")
    bench_sub = bench.add_subparsers(dest="bench_command", required=True)

    p = bench_sub.add_parser("build-pairs")
    p.add_argument("--tasks", required=True)
    p.add_argument("--turn-mode", choices=("single", "multi"), default="single")
    p.add_argument("--out", required=True)
    p.add_argument("--report")

    p = bench_sub.add_parser("eval")
    p.add_argument("--pairs", required=True)
    p.add_argument("--judge", required=True, help="endpoint config JSON")
    p.add_argument("--mode", choices=("think", "no_think"), default="think")
    p.add_argument("--report", required=True)
    p.add_argument("--records")
    p.add_argument("--cache-dir")

    p = bench_sub.add_parser("bon")
    p.add_argument("--candidates", required=True, help="JSONL of {task_id, context, candidates}")
    p.add_argument("--judge", required=True)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--out", required=True)
    p.add_argument("--cache-dir")

    p = bench_sub.add_parser("self-correct")
    p.add_argument("--tasks", required=True, help="JSONL of {task_id, context}")
    p.add_argument("--policy", required=True)
    p.add_argument("--critic", required=True)
    p.add_argument("--editor", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--cache-dir")

    p = sub.add_parser("synth", help="generate the bundled synthetic corpus")
    p.add_argument("--n-tasks", type=int, default=50)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--source", default="synthetic")

    p = sub.add_parser("mock-serve", help="serve a scripted chat-completions endpoint")
    p.add_argument("--trajectories", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8200)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.log_format)
    try:
        if args.command == "normalize":
            stage_normalize(args.source, args.in_path, args.out, args.report, args.adapter)
        elif args.command == "segment":
            stage_segment(args.in_path, args.out, args.failure_markers, args.report)
        elif args.command == "sample-responses":
            stage_sample(args.segments, args.endpoints, args.out, args.cache_dir,
                         args.n_per_endpoint, args.report)
        elif args.command == "score":
            stage_score(args.segments, args.responses, args.out, args.report)
        elif args.command == "build-pairs":
            stage_build_pairs(args.scored, args.segments, args.out, args.complexity_cap,
                              args.bins, args.per_context_cap, args.report)
        elif args.command == "bmds":
            stage_bmds(args.pairs, args.out, args.n, args.bins, args.seed,
                       args.holdout, args.validation_out, args.report)
        elif args.command == "render":
            stage_render(args.pairs, args.out, args.mode, args.seed, args.report)
        elif args.command == "advantage":
            stage_advantage(args.rewards, args.out, args.group_size, args.report)
        elif args.command == "run":
            config = json.loads(Path(args.config).read_text(encoding="utf-8"))
            if args.seed is not None:
                config["seed"] = args.seed
            run_pipeline(config, args.stage, args.cache_dir)
        elif args.command == "bench":
            return {
                "build-pairs": cmd_bench_build_pairs,
                "eval": cmd_bench_eval,
                "bon": cmd_bench_bon,
                "self-correct": cmd_bench_self_correct,
            }[args.bench_command](args)
        elif args.command == "synth":
            n = synth.write_raw_corpus(args.out, args.n_tasks, args.seed, args.source)
            log.info("wrote %d synthetic records to %s", n, args.out)
        elif args.command == "mock-serve":
            from .mockserver import make_server

            server = make_server(args.trajectories, args.host, args.port)
            log.info("mock endpoint on http://%s:%d/v1", *server.server_address)
            server.serve_forever()
    except (ConfigError, FileNotFoundError, json.JSONDecodeError, KeyError) as e:
        log.error("config/io error: %s", e)
        return EXIT_CONFIG
    except (InsufficientDataError, GroupTooSmallError, ValueError) as e:
        log.error("stage failure: %s", e)
        return EXIT_STAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
