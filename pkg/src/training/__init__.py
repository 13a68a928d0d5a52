"""Optimizer, training loop, validation scoring and pseudopair rounds."""

from .optim import OptimizerState, adam_step, clip_gradients, global_norm
from .trainer import Inspection, TrainConfig, TrainLog, TrainResult, Trainer, train
from .evaluator import ValidationEvaluator
from .cycle import CycleResult, PseudoPairConfig, run_pseudopair_cycle

__all__ = [
    'OptimizerState',
    'adam_step',
    'clip_gradients',
    'global_norm',
    'Inspection',
    'TrainConfig',
    'TrainLog',
    'TrainResult',
    'Trainer',
    'train',
    'ValidationEvaluator',
    'CycleResult',
    'PseudoPairConfig',
    'run_pseudopair_cycle',
]
