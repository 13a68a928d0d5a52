"""Contrastive ranking objectives over in-batch negatives.

For a square similarity matrix S with gold pairs on the diagonal, item i
contributes a column term (contrastive a_j against b_i, S[j][i]) and a row
term (a_i against contrastive b_j, S[i][j]), each a hinge
``max(0, α − S[i][i] + S[·][·])`` over j ≠ i. Max-violation keeps the
hardest negative per term (ties → lowest index, an empty max is 0);
sum-violation adds all of them.

Summation order: each item's total is ``row term + column term``; the batch
total is a single numpy sum over the n item totals. Sum-violation row and
column terms are numpy sums over the n entries of a contiguous row, with the
gold entry contributing 0.
"""
from dataclasses import dataclass
from typing import Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..autograd import Tensor, constant, ops
from ..utils.errors import ShapeError
from .encoders import EmbeddingBatch

MAX_VIOLATION = "max-violation"
SUM_VIOLATION = "sum-violation"


class LossConfig(BaseModel):
    """Ranking-loss settings."""
    model_config = ConfigDict(extra="forbid")

    margin: float = Field(default=0.2, gt=0)
    variant: Literal["max-violation", "sum-violation"] = MAX_VIOLATION
    aggregation: Literal["sum", "mean"] = "sum"


@dataclass
class SimilarityMatrix:
    """S[i][j] = s(a_i, b_j) with the ids of both sides."""
    scores: Tensor
    row_ids: Tuple[str, ...] = ()
    col_ids: Tuple[str, ...] = ()

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.scores.shape

    def numpy(self) -> np.ndarray:
        return self.scores.numpy()


def similarity_matrix(
    a: EmbeddingBatch,
    b: EmbeddingBatch,
    row_ids: Tuple[str, ...] = (),
    col_ids: Tuple[str, ...] = ()
) -> SimilarityMatrix:
    """Cosine similarities of unit-normalized rows: S = A Bᵀ."""
    if a.dim != b.dim:
        raise ShapeError("similarity_matrix", a.vectors.shape, b.vectors.shape)
    return SimilarityMatrix(ops.matmul(a.vectors, ops.transpose(b.vectors)), row_ids, col_ids)


def _scores(s) -> Tensor:
    scores = s.scores if isinstance(s, SimilarityMatrix) else s
    if scores.ndim != 2 or scores.shape[0] != scores.shape[1]:
        raise ShapeError("ranking_loss", scores.shape, detail="similarity matrix must be square")
    return scores


def violation_costs(scores: Tensor, margin: float) -> Tuple[Tensor, Tensor]:
    """
    Hinge costs of every contrastive pair.

    Returns:
        (row costs C[i][j] = hinge(α − S[i][i] + S[i][j]),
         column costs C[i][j] = hinge(α − S[i][i] + S[j][i])), zero on the diagonal
    """
    n = scores.shape[0]
    dtype = scores.data.dtype
    gold = ops.matmul(ops.diagonal(scores), constant(np.ones((1, n), dtype=dtype)))
    offset = ops.shift(ops.scale(gold, -1.0), margin)
    off_diagonal = constant(1.0 - np.eye(n, dtype=dtype))
    rows = ops.mul(ops.hinge(ops.add(offset, scores)), off_diagonal)
    cols = ops.mul(ops.hinge(ops.add(offset, ops.transpose(scores))), off_diagonal)
    return rows, cols


def _aggregate(per_item: Tensor, config: LossConfig) -> Tensor:
    total = ops.sum(per_item)
    if config.aggregation == "mean":
        return ops.scale(total, 1.0 / per_item.shape[0])
    return total


def max_violation_loss(s, config: LossConfig) -> Tensor:
    """Hinge on the hardest in-batch negative of each term."""
    scores = _scores(s)
    rows, cols = violation_costs(scores, config.margin)
    row_term, _ = ops.row_max(rows)
    col_term, _ = ops.row_max(cols)
    return _aggregate(ops.add(row_term, col_term), config)


def sum_violation_loss(s, config: LossConfig) -> Tensor:
    """Hinge summed over all in-batch negatives of each term."""
    scores = _scores(s)
    rows, cols = violation_costs(scores, config.margin)
    return _aggregate(ops.add(ops.sum(rows, axis=1), ops.sum(cols, axis=1)), config)


def ranking_loss(s, config: LossConfig) -> Tensor:
    if config.variant == SUM_VIOLATION:
        return sum_violation_loss(s, config)
    return max_violation_loss(s, config)


def pair_loss(a: EmbeddingBatch, b: EmbeddingBatch, config: LossConfig) -> Tensor:
    """Ranking loss of aligned batches (row i of ``a`` is the gold partner of row i of ``b``)."""
    if len(a) != len(b):
        raise ShapeError("pair_loss", a.vectors.shape, b.vectors.shape, detail="batches must align")
    return ranking_loss(similarity_matrix(a, b), config)


def c2c_loss(captions_1: EmbeddingBatch, captions_2: EmbeddingBatch, config: LossConfig) -> Tensor:
    """Caption–caption loss: same formula and margin with (a, b) = (c_ℓ1, c_ℓ2)."""
    if len(captions_1) != len(captions_2):
        raise ShapeError("c2c_loss", captions_1.vectors.shape, captions_2.vectors.shape)
    return pair_loss(captions_1, captions_2, config)


def reference_loss(scores: np.ndarray, config: LossConfig) -> float:
    """Literal double-loop transcription, used as an oracle."""
    scores = np.asarray(scores)
    n = scores.shape[0]
    if scores.ndim != 2 or scores.shape[1] != n:
        raise ShapeError("reference_loss", scores.shape)
    alpha = config.margin
    items = []
    for i in range(n):
        row_costs = []
        col_costs = []
        for j in range(n):
            if j == i:
                row_costs.append(0.0)
                col_costs.append(0.0)
                continue
            row_costs.append(max(0.0, alpha - scores[i][i] + scores[i][j]))
            col_costs.append(max(0.0, alpha - scores[i][i] + scores[j][i]))
        if config.variant == SUM_VIOLATION:
            row_term = np.sum(np.array(row_costs, dtype=scores.dtype))
            col_term = np.sum(np.array(col_costs, dtype=scores.dtype))
        else:
            row_term = max(row_costs)
            col_term = max(col_costs)
        items.append(row_term + col_term)
    total = np.sum(np.array(items, dtype=scores.dtype))
    if config.aggregation == "mean":
        total = total * (1.0 / n)
    return float(total)
