"""Python bindings for the textcnn-lab core operations."""

from ._core import (  # noqa: F401
    FilterRules,
    Vocabulary,
    build_vocabulary,
    complement_vocabulary,
    encode,
    kmeans,
    pca2,
    prune_vocabulary,
    randomize_first_layer,
    shuffle_across_filters,
    shuffle_within_filters,
    table_param_counts,
    tokenize_and_filter,
    word_importance,
)

__all__ = [
    "FilterRules",
    "Vocabulary",
    "build_vocabulary",
    "complement_vocabulary",
    "encode",
    "kmeans",
    "pca2",
    "prune_vocabulary",
    "randomize_first_layer",
    "shuffle_across_filters",
    "shuffle_within_filters",
    "table_param_counts",
    "tokenize_and_filter",
    "word_importance",
]
