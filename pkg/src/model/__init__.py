"""Grounded encoders, ranking losses and checkpoints."""

from .vocabulary import PAD, UNK, Vocabulary, build_vocabulary
from .encoders import (
    EmbeddingBatch,
    GroundedModel,
    ModelConfig,
    ModelParams,
    encode_images,
    encode_sentences,
    init_params,
)
from .losses import (
    LossConfig,
    SimilarityMatrix,
    c2c_loss,
    max_violation_loss,
    pair_loss,
    ranking_loss,
    reference_loss,
    similarity_matrix,
    sum_violation_loss,
)
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    'PAD',
    'UNK',
    'Vocabulary',
    'build_vocabulary',
    'EmbeddingBatch',
    'GroundedModel',
    'ModelConfig',
    'ModelParams',
    'encode_images',
    'encode_sentences',
    'init_params',
    'LossConfig',
    'SimilarityMatrix',
    'c2c_loss',
    'max_violation_loss',
    'pair_loss',
    'ranking_loss',
    'reference_loss',
    'similarity_matrix',
    'sum_violation_loss',
    'load_checkpoint',
    'save_checkpoint',
]
