"""Tag-aware recommendation by blended resource diffusion on a
user-item-tag tripartite graph, with a seeded evaluation harness."""

from .diffusion import (
    diffuse_both,
    diffuse_item_tag,
    diffuse_user_item,
    initial_vector,
    integrate,
    score_user,
)
from .errors import (
    ConfigError,
    ContractError,
    DataError,
    ParseError,
    TridiffError,
    UnscorableUserError,
)
from .experiment import (
    DEFAULT_GRID,
    ExperimentConfig,
    SweepResult,
    emit_report,
    run_once,
    sweep,
)
from .graph import TripartiteGraph, build_graph
from .ingestion import (
    InteractionRecord,
    PurificationPolicy,
    parse_interactions,
    purify,
    read_interactions,
    write_interactions,
)
from .metrics import (
    MetricsReport,
    auc,
    auc_user,
    diversification,
    diversification_sampled,
    evaluate_split,
    novelty,
    recall,
)
from .recommend import (
    RecommendationList,
    candidate_items,
    rank_of_items,
    recommend,
    recommend_from_scores,
    top_candidates,
    write_lists,
)
from .splitting import SplitDataset, derive_run_seed, split, split_run, write_manifest
from .synth import SynthConfig, synth_generate

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ContractError",
    "DataError",
    "DEFAULT_GRID",
    "ExperimentConfig",
    "InteractionRecord",
    "MetricsReport",
    "ParseError",
    "PurificationPolicy",
    "RecommendationList",
    "SplitDataset",
    "SweepResult",
    "SynthConfig",
    "TridiffError",
    "TripartiteGraph",
    "UnscorableUserError",
    "auc",
    "auc_user",
    "build_graph",
    "candidate_items",
    "derive_run_seed",
    "diffuse_both",
    "diffuse_item_tag",
    "diffuse_user_item",
    "diversification",
    "diversification_sampled",
    "emit_report",
    "evaluate_split",
    "initial_vector",
    "integrate",
    "novelty",
    "parse_interactions",
    "purify",
    "rank_of_items",
    "read_interactions",
    "recall",
    "recommend",
    "recommend_from_scores",
    "run_once",
    "top_candidates",
    "score_user",
    "split",
    "split_run",
    "sweep",
    "synth_generate",
    "write_interactions",
    "write_lists",
    "write_manifest",
]
