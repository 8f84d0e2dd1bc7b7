# SPDX-License-Identifier: Apache-2.0
# Copyright 2026 The Diverge Authors
"""Python bindings for the diverge C++ library."""

from ._diverge import (
    ContractError,
    DivergeError,
    HashEmbedder,
    chunk_windows,
    cosine_similarity,
    count_unique,
    extract_text,
    filter_url,
    minmax_normalize,
    mmr_indices,
    rerank_indices,
    run_cli,
    semantic_diversity,
    unified_score,
)

__all__ = [
    "ContractError",
    "DivergeError",
    "HashEmbedder",
    "chunk_windows",
    "cosine_similarity",
    "count_unique",
    "extract_text",
    "filter_url",
    "minmax_normalize",
    "mmr_indices",
    "rerank_indices",
    "run_cli",
    "semantic_diversity",
    "unified_score",
]
