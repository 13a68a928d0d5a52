"""Similarity-percentile filters for pseudopairs."""
from dataclasses import replace
from typing import Literal, Optional, Tuple

import numpy as np

from ..utils.logging import get_logger
from .generate import PseudoPairSet

logger = get_logger("pseudopairs.filters")

FilterPolicy = Literal["none", "keep-top-25", "remove-bottom-25"]
FILTER_POLICIES: Tuple[str, ...] = ("none", "keep-top-25", "remove-bottom-25")

# policy -> percentile as a fraction (numerator, denominator)
_PERCENTILES = {"keep-top-25": (3, 4), "remove-bottom-25": (1, 4)}


def nearest_rank_threshold(similarities: np.ndarray, numerator: int, denominator: int) -> float:
    """
    Percentile threshold by nearest rank.

    The threshold is the sorted value at 0-based position
    ``min(ceil(q * N), N - 1)`` with q = numerator / denominator, so keeping
    values >= threshold keeps the top ``N - ceil(q * N)`` of N distinct values.
    """
    values = np.sort(np.asarray(similarities, dtype=np.float64))
    n = values.size
    position = min(-(-numerator * n // denominator), n - 1)
    return float(values[position])


def apply_filter(pairs: PseudoPairSet, policy: str) -> PseudoPairSet:
    """
    Keep pairs whose similarity reaches the policy's percentile.

    ``keep-top-25`` keeps similarity >= P75; ``remove-bottom-25`` keeps
    similarity >= P25; ``none`` is the identity. Pair order is preserved.

    Raises:
        ValueError: unknown policy
    """
    if policy not in FILTER_POLICIES:
        raise ValueError(f"Unknown filter policy {policy!r}; expected one of {FILTER_POLICIES}")
    if policy == "none" or not len(pairs):
        return replace(pairs, policy=policy)

    threshold: Optional[float] = nearest_rank_threshold(pairs.similarities, *_PERCENTILES[policy])
    kept = tuple(p for p in pairs if p.similarity >= threshold)
    logger.info(f"Filter {policy}: threshold {threshold:.4f}, kept {len(kept)}/{len(pairs)} pairs")
    return replace(pairs, pairs=kept, policy=policy, threshold=threshold)
