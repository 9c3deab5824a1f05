# Copyright 2026 The chunkmem Authors
# SPDX-License-Identifier: Apache-2.0
"""Streaming chunk memory: text-conditioned retrieval and sparse memory activation."""

from ._chunkmem import (
    ChunkmemError,
    Mode,
    ModelConfig,
    NarrativeScript,
    Segment,
    ablate,
    gated_attention,
    matmul,
    mean_pool_rows,
    parse_script,
    parse_script_text,
    retrieve_top,
    run,
    sdp_attention,
    select_top_k,
    softmax_rows,
    text_relevance,
)

__all__ = [
    "ChunkmemError",
    "Mode",
    "ModelConfig",
    "NarrativeScript",
    "Segment",
    "ablate",
    "gated_attention",
    "matmul",
    "mean_pool_rows",
    "parse_script",
    "parse_script_text",
    "retrieve_top",
    "run",
    "sdp_attention",
    "select_top_k",
    "softmax_rows",
    "text_relevance",
]
