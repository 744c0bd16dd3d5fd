# SPDX-License-Identifier: Apache-2.0
"""Multimodal entity retrieval: exact search, channel fusion, adapter
training and evaluation over precomputed embeddings."""

from ._core import (
    EmbeddingMatrix,
    XmrError,
    __version__,
    detect_kind,
    evaluate,
    exact_match,
    export_channels,
    fisher_randomization,
    fuse,
    grid_search_weights,
    l2_normalize,
    normalize_answer,
    read_checkpoint,
    read_embeddings,
    read_qrels,
    read_run,
    read_two_column,
    soft_match,
    split_passages,
    split_sentences,
    token_f1,
    topk,
    train,
    write_embeddings,
    write_qrels,
    write_run,
    write_two_column,
)
from . import emb1

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
