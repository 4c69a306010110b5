"""toolcritic: preference-pair construction and judge evaluation for
tool-calling reward models.

The library turns raw function-calling corpora into format-aligned
trajectories, scores sampled responses against ground truth with a rule-based
verifier, builds balanced pairwise preference datasets, renders judge/critic
prompts with verifiable answers, and evaluates judges with a
position-swapped protocol.
"""

__version__ = "0.1.0"

from .bench import (
    BenchPair,
    BonResult,
    EvalRecord,
    ScoreReport,
    bon_select,
    build_bench_pairs,
    evaluate_pairwise,
    evaluate_scalar,
    self_correct,
)
from .client import ChatClient, EndpointConfig
from .critique import (
    CritiqueQuery,
    RolloutGroup,
    choice_reward,
    extract_choice,
    group_advantages,
    render_auxiliary,
    render_history,
    render_pairwise,
    reward,
)
from .ingest import IngestReport, SourceAdapter, build_system_message, normalize, validate_schemas
from .messages import (
    ContentBlocks,
    Message,
    ToolCall,
    ToolCallParseError,
    ToolSchema,
    Trajectory,
    extract_tool_calls,
    parse_content,
)
from .pairs import (
    BinSpec,
    CandidateQuad,
    PairwiseSample,
    bmds_sample,
    build_candidate_pool,
    build_pairs,
    split_dataset,
)
from .scorer import ScoreResult, score_response, sim
from .segmenter import FailureMarkers, Segment, preliminary_filter, segment, strict_validate

__all__ = [
    "__version__",
    "BenchPair",
    "BinSpec",
    "BonResult",
    "CandidateQuad",
    "ChatClient",
    "ContentBlocks",
    "CritiqueQuery",
    "EndpointConfig",
    "EvalRecord",
    "FailureMarkers",
    "IngestReport",
    "Message",
    "PairwiseSample",
    "RolloutGroup",
    "ScoreReport",
    "ScoreResult",
    "Segment",
    "SourceAdapter",
    "ToolCall",
    "ToolCallParseError",
    "ToolSchema",
    "Trajectory",
    "bmds_sample",
    "bon_select",
    "build_bench_pairs",
    "build_candidate_pool",
    "build_pairs",
    "build_system_message",
    "choice_reward",
    "evaluate_pairwise",
    "evaluate_scalar",
    "extract_choice",
    "extract_tool_calls",
    "group_advantages",
    "normalize",
    "parse_content",
    "preliminary_filter",
    "render_auxiliary",
    "render_history",
    "render_pairwise",
    "reward",
    "score_response",
    "segment",
    "self_correct",
    "sim",
    "split_dataset",
    "strict_validate",
    "validate_schemas",
]
