"""Finite-difference verification of analytic gradients."""
from typing import Callable, Dict, Sequence

import numpy as np

from .tensor import Tape, Tensor, high_precision

# Relative errors are measured against max(|analytic|, |numeric|, floor) so
# that entries whose true gradient is zero are compared absolutely.
RELATIVE_FLOOR = 1e-3


def _scalar(build_loss: Callable[[], Tensor]) -> float:
    return float(np.asarray(build_loss().data, dtype=np.float64).reshape(-1)[0])


def numerical_gradient(
    build_loss: Callable[[], Tensor],
    tensor: Tensor,
    step: float = 1e-5
) -> np.ndarray:
    """
    Central finite differences of ``build_loss`` with respect to ``tensor``.

    ``tensor.data`` is perturbed in place and restored afterwards.
    """
    flat = tensor.data.reshape(-1)
    grad = np.zeros(flat.size, dtype=np.float64)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + step
        plus = _scalar(build_loss)
        flat[i] = original - step
        minus = _scalar(build_loss)
        flat[i] = original
        grad[i] = (plus - minus) / (2.0 * step)
    return grad.reshape(tensor.shape)


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), RELATIVE_FLOOR)
    if analytic.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric) / denom))


def gradient_check(
    build_loss: Callable[[], Tensor],
    params: Sequence[Tensor],
    step: float = 1e-5
) -> Dict[str, float]:
    """
    Compare tape gradients with central differences in double precision.

    Args:
        build_loss: Zero-argument function building a scalar loss from ``params``
        params: Double-precision leaf tensors to check
        step: Finite-difference step

    Returns:
        Max relative error per parameter (keyed by name, or position)
    """
    with high_precision():
        with Tape() as tape:
            loss = build_loss()
        analytic = tape.backward(loss)
        errors = {}
        for i, param in enumerate(params):
            numeric = numerical_gradient(build_loss, param, step)
            grad = analytic.get(param, np.zeros_like(param.data))
            errors[param.name or str(i)] = max_relative_error(grad, numeric)
    return errors
