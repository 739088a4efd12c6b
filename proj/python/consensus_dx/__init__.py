"""Configuration-ensemble diagnosis prediction over a decoding-parameter grid."""

from ._core import (
    Error,
    TurnConfig,
    UpstreamError,
    ValidationError,
    analyze,
    character_budget,
    combination_count,
    full_grid,
    grid_hash,
    is_match,
    k_subsets,
    levenshtein,
    majority_vote,
    normalize,
    partition,
    predict,
    report,
    similarity,
    split_corpus,
    summarize,
    sweep,
    vote,
    write_synthetic_corpus,
)

__all__ = [
    "Error",
    "TurnConfig",
    "UpstreamError",
    "ValidationError",
    "analyze",
    "character_budget",
    "combination_count",
    "full_grid",
    "grid_hash",
    "is_match",
    "k_subsets",
    "levenshtein",
    "majority_vote",
    "normalize",
    "partition",
    "predict",
    "report",
    "similarity",
    "split_corpus",
    "summarize",
    "sweep",
    "vote",
    "write_synthetic_corpus",
]
