"""Minimal reverse-mode automatic differentiation over dense tensors."""

from .tensor import (
    Tape,
    Tensor,
    active_tape,
    backward,
    constant,
    get_default_dtype,
    high_precision,
    no_grad,
    parameter,
)
from .gradcheck import gradient_check, max_relative_error, numerical_gradient

__all__ = [
    'Tape',
    'Tensor',
    'active_tape',
    'backward',
    'constant',
    'get_default_dtype',
    'high_precision',
    'no_grad',
    'parameter',
    'gradient_check',
    'max_relative_error',
    'numerical_gradient',
]
