"""Rank computation and rank statistics for bidirectional retrieval."""
from typing import Iterable, Sequence

import numpy as np

from ..utils.errors import DatasetError, ShapeError


def _stable_positions(scores: np.ndarray) -> np.ndarray:
    """Position (0-based) of every column in the descending, index-stable ordering of its row."""
    order = np.argsort(-scores, axis=1, kind="stable")
    positions = np.empty_like(order)
    rows = np.arange(scores.shape[0])[:, None]
    positions[rows, order] = np.arange(scores.shape[1])[None, :]
    return positions


def rank_image_to_text(scores: np.ndarray, gold: Sequence[Iterable[int]]) -> np.ndarray:
    """
    Best rank of any gold caption for each image.

    Captions are ordered by decreasing similarity, ties by caption index.

    Args:
        scores: images x captions similarities
        gold: Gold caption column indices per image

    Returns:
        1-based ranks, one per image

    Raises:
        DatasetError: an image has no gold caption
    """
    scores = np.asarray(scores)
    if scores.ndim != 2 or len(gold) != scores.shape[0]:
        raise ShapeError("rank_image_to_text", scores.shape, (len(gold),))
    positions = _stable_positions(scores)
    ranks = np.empty(scores.shape[0], dtype=np.int64)
    for i, columns in enumerate(gold):
        columns = list(columns)
        if not columns:
            raise DatasetError(f"Image row {i} has no gold caption")
        ranks[i] = 1 + positions[i, columns].min()
    return ranks


def rank_text_to_image(scores: np.ndarray, gold: Sequence[int]) -> np.ndarray:
    """
    Rank of the gold image for each caption.

    Args:
        scores: captions x images similarities (the transposed image–caption matrix)
        gold: Gold image column index per caption

    Returns:
        1-based ranks, one per caption
    """
    scores = np.asarray(scores)
    gold = np.asarray(gold, dtype=np.int64)
    if scores.ndim != 2 or gold.shape != (scores.shape[0],):
        raise ShapeError("rank_text_to_image", scores.shape, gold.shape)
    if gold.size and (gold.min() < 0 or gold.max() >= scores.shape[1]):
        raise DatasetError("Gold image index out of range")
    positions = _stable_positions(scores)
    return 1 + positions[np.arange(scores.shape[0]), gold]


def recall_at_k(ranks: Sequence[int], k: int) -> float:
    """Percentage of ranks <= k."""
    ranks = np.asarray(ranks)
    if ranks.size == 0:
        raise ValueError("recall_at_k needs at least one rank")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return 100.0 * float(np.count_nonzero(ranks <= k)) / ranks.size


def median_rank(ranks: Sequence[int]) -> float:
    """Median rank; the lower middle value for an even count."""
    ranks = np.sort(np.asarray(ranks))
    if ranks.size == 0:
        raise ValueError("median_rank needs at least one rank")
    return float(ranks[(ranks.size - 1) // 2])


def mean_rank(ranks: Sequence[int]) -> float:
    ranks = np.asarray(ranks)
    if ranks.size == 0:
        raise ValueError("mean_rank needs at least one rank")
    return float(ranks.mean())
