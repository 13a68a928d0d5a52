"""Bilingual grounded encoders: shared word embeddings + GRU, linear image projection.

Both encoders emit L2-normalized rows in the same joint space, whose width is
the GRU hidden size.

GRU convention (row vectors, gate blocks ordered [z | r | h] in the stacked
weights)::

    z  = σ(x W_z + h U_z + b_z)
    r  = σ(x W_r + h U_r + b_r)
    h~ = tanh(x W_h + (r ⊙ h) U_h + b_h)
    h' = (1 − z) ⊙ h + z ⊙ h~
"""
from dataclasses import dataclass, field, fields
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..autograd import Tensor, constant, no_grad, ops, parameter
from ..data.corpus import CaptionRecord
from ..utils.errors import DatasetError, ShapeError
from ..utils.logging import get_logger
from .vocabulary import Vocabulary

logger = get_logger("model.encoders")


class ModelConfig(BaseModel):
    """Model dimensions; defaults are the full-scale setting."""
    model_config = ConfigDict(extra="forbid")

    word_dim: int = Field(default=300, gt=0)
    hidden_dim: int = Field(default=1024, gt=0)
    feature_dim: int = Field(default=2048, gt=0)
    min_count: int = Field(default=1, ge=1)
    init_scale: float = Field(default=0.1, gt=0)


@dataclass
class ModelParams:
    """Everything the optimizer updates.

    Attributes:
        embeddings: |V| x word_dim
        gru_input: word_dim x 3H, blocks [z | r | h]
        gru_recurrent: H x 3H, blocks [z | r | h]
        gru_bias: 1 x 3H, blocks [z | r | h]
        image_projection: feature_dim x H
        image_bias: 1 x H
    """
    embeddings: Tensor
    gru_input: Tensor
    gru_recurrent: Tensor
    gru_bias: Tensor
    image_projection: Tensor
    image_bias: Tensor

    def named(self) -> List[Tuple[str, Tensor]]:
        return [(f.name, getattr(self, f.name)) for f in fields(self)]

    def tensors(self) -> List[Tensor]:
        return [t for _, t in self.named()]

    @property
    def word_dim(self) -> int:
        return self.embeddings.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.gru_recurrent.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.image_projection.shape[0]

    def all_finite(self) -> bool:
        return all(np.isfinite(t.data).all() for t in self.tensors())

    def copy(self) -> "ModelParams":
        """Independent snapshot with the same dtype."""
        return ModelParams(**{
            name: parameter(t.data.copy(), name=name, dtype=t.data.dtype) for name, t in self.named()
        })


def init_params(vocab_size: int, config: ModelConfig, rng: np.random.Generator) -> ModelParams:
    """
    Seeded initialization.

    Embeddings and GRU weights are uniform in [-init_scale, init_scale];
    the image projection is Xavier-uniform; biases start at zero.
    """
    e, h, f = config.word_dim, config.hidden_dim, config.feature_dim
    s = config.init_scale
    xavier = np.sqrt(6.0 / (f + h))
    return ModelParams(
        embeddings=parameter(rng.uniform(-s, s, (vocab_size, e)), name="embeddings"),
        gru_input=parameter(rng.uniform(-s, s, (e, 3 * h)), name="gru_input"),
        gru_recurrent=parameter(rng.uniform(-s, s, (h, 3 * h)), name="gru_recurrent"),
        gru_bias=parameter(np.zeros((1, 3 * h)), name="gru_bias"),
        image_projection=parameter(rng.uniform(-xavier, xavier, (f, h)), name="image_projection"),
        image_bias=parameter(np.zeros((1, h)), name="image_bias"),
    )


@dataclass
class EmbeddingBatch:
    """Unit-norm joint-space vectors.

    Attributes:
        vectors: n x d tensor
        modality: "image" or "sentence"
        language: Language tag of sentence batches
        degenerate: Rows whose pre-normalization state was all zeros; these
            rows are zero vectors instead of unit vectors
    """
    vectors: Tensor
    modality: str
    language: Optional[str] = None
    degenerate: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def numpy(self) -> np.ndarray:
        return self.vectors.numpy()


def _normalize(state: Tensor, modality: str, language: Optional[str]) -> EmbeddingBatch:
    degenerate = ~np.any(state.data != 0, axis=1)
    if degenerate.any():
        logger.warning(f"{int(degenerate.sum())} {modality} rows have an all-zero state; emitting zero vectors")
    return EmbeddingBatch(ops.l2_normalize_rows(state), modality, language, degenerate)


def gru_final_state(params: ModelParams, token_ids: np.ndarray, lengths: np.ndarray) -> Tensor:
    """Final GRU hidden state of each padded sequence (padding does not touch the state)."""
    token_ids = np.asarray(token_ids, dtype=np.int64)
    lengths = np.asarray(lengths, dtype=np.int64)
    if token_ids.ndim != 2 or lengths.shape != (token_ids.shape[0],):
        raise ShapeError("encode_sentences", token_ids.shape, lengths.shape)
    if lengths.size and lengths.min() < 1:
        raise DatasetError(f"Zero-length sequence at row {int(np.argmin(lengths))}")
    if lengths.size and lengths.max() > token_ids.shape[1]:
        raise ShapeError("encode_sentences", token_ids.shape, lengths.shape, detail="length exceeds padding")

    n, hidden = token_ids.shape[0], params.hidden_dim
    dtype = params.gru_recurrent.data.dtype
    recurrent_zr = ops.columns(params.gru_recurrent, 0, 2 * hidden)
    recurrent_h = ops.columns(params.gru_recurrent, 2 * hidden, 3 * hidden)

    h = constant(np.zeros((n, hidden), dtype=dtype))
    for t in range(int(lengths.max()) if n else 0):
        x = ops.embedding(params.embeddings, token_ids[:, t])
        gates_x = ops.add(ops.matmul(x, params.gru_input), params.gru_bias)
        zr = ops.sigmoid(ops.add(ops.columns(gates_x, 0, 2 * hidden), ops.matmul(h, recurrent_zr)))
        z = ops.columns(zr, 0, hidden)
        r = ops.columns(zr, hidden, 2 * hidden)
        candidate = ops.tanh(ops.add(
            ops.columns(gates_x, 2 * hidden, 3 * hidden),
            ops.matmul(ops.mul(r, h), recurrent_h),
        ))
        keep = ops.shift(ops.scale(z, -1.0), 1.0)
        h_next = ops.add(ops.mul(keep, h), ops.mul(z, candidate))

        active = lengths > t
        if active.all():
            h = h_next
        else:
            mask = np.repeat(active[:, None], hidden, axis=1).astype(dtype)
            h = ops.add(ops.mul(constant(mask), h_next), ops.mul(constant(1.0 - mask), h))
    return h


def encode_sentences(
    params: ModelParams,
    vocab: Vocabulary,
    token_ids: np.ndarray,
    lengths: np.ndarray,
    language: Optional[str] = None
) -> EmbeddingBatch:
    """
    Encode padded token-id sequences.

    Row i is the L2-normalized final GRU state of sequence i. The language
    tag is carried along but never reaches the encoder.

    Raises:
        DatasetError: a sequence has length 0
        ShapeError: ids out of vocabulary range or malformed shapes
    """
    if params.embeddings.shape[0] != len(vocab):
        raise ShapeError("encode_sentences", params.embeddings.shape, (len(vocab),),
                         detail="embedding table does not match the vocabulary")
    state = gru_final_state(params, token_ids, lengths)
    return _normalize(state, "sentence", language)


def encode_images(params: ModelParams, features: np.ndarray) -> EmbeddingBatch:
    """
    Project precomputed image features into the joint space.

    Row i is l2-normalize(features_i W_I + b_I).
    """
    features = np.asarray(features)
    if features.ndim != 2 or features.shape[1] != params.feature_dim:
        raise ShapeError("encode_images", features.shape, params.image_projection.shape)
    projected = ops.add(ops.matmul(constant(features), params.image_projection), params.image_bias)
    return _normalize(projected, "image", None)


@dataclass
class GroundedModel:
    """Vocabulary, parameters and dimensions of one image–sentence ranking model."""
    vocab: Vocabulary
    params: ModelParams
    config: ModelConfig

    @classmethod
    def create(cls, vocab: Vocabulary, config: ModelConfig, seed: int) -> "GroundedModel":
        rng = np.random.default_rng(seed)
        return cls(vocab, init_params(len(vocab), config, rng), config)

    def copy(self) -> "GroundedModel":
        return GroundedModel(self.vocab, self.params.copy(), self.config.model_copy())

    def sentence_batch(self, records: Sequence[CaptionRecord]) -> EmbeddingBatch:
        """Differentiable encoding of caption records (recorded on the active tape)."""
        ids, lengths = self.vocab.encode_padded([r.tokens for r in records])
        language = records[0].language if records else None
        return encode_sentences(self.params, self.vocab, ids, lengths, language)

    def encode_captions(self, records: Sequence[CaptionRecord], chunk_size: int = 512) -> np.ndarray:
        """Unit-norm sentence embeddings as a plain array (no tape)."""
        if not records:
            return np.zeros((0, self.params.hidden_dim), dtype=self.params.gru_recurrent.data.dtype)
        parts = []
        with no_grad():
            for start in range(0, len(records), chunk_size):
                parts.append(self.sentence_batch(records[start:start + chunk_size]).numpy())
        return np.concatenate(parts, axis=0)

    def encode_images(self, features: np.ndarray, chunk_size: int = 1024) -> np.ndarray:
        """Unit-norm image embeddings as a plain array (no tape)."""
        parts = []
        with no_grad():
            for start in range(0, len(features), chunk_size):
                parts.append(encode_images(self.params, features[start:start + chunk_size]).numpy())
        if not parts:
            return np.zeros((0, self.params.hidden_dim), dtype=self.params.image_projection.data.dtype)
        return np.concatenate(parts, axis=0)
