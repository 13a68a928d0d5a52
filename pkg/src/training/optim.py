"""Adam and global-norm gradient clipping over named parameters."""
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from ..model.encoders import ModelParams
from ..utils.errors import NumericalError

Gradients = Dict[str, np.ndarray]


@dataclass
class OptimizerState:
    """Adam moments per parameter name."""
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "OptimizerState":
        return cls(
            first_moment={name: np.zeros_like(t.data) for name, t in params.named()},
            second_moment={name: np.zeros_like(t.data) for name, t in params.named()},
        )

    def is_fresh(self) -> bool:
        """True before the first update (all moments zero)."""
        return self.step == 0 and all(
            not m.any() for m in list(self.first_moment.values()) + list(self.second_moment.values())
        )


def global_norm(grads: Gradients) -> float:
    """L2 norm of all gradients concatenated."""
    return float(np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads.values())))


def clip_gradients(grads: Gradients, max_norm: float) -> float:
    """
    Scale all gradients in place so that their global norm is at most ``max_norm``.

    Args:
        grads: Gradients by parameter name
        max_norm: Clipping threshold

    Returns:
        Scaling factor applied (1.0 when the norm is already within bounds)
    """
    norm = global_norm(grads)
    if not np.isfinite(norm) or norm <= max_norm:
        return 1.0
    factor = max_norm / norm
    for name, g in grads.items():
        grads[name] = (g * g.dtype.type(factor)).astype(g.dtype, copy=False)
    return factor


def adam_step(params: ModelParams, grads: Gradients, state: OptimizerState, lr: float) -> None:
    """
    One bias-corrected Adam update, in place.

    Raises:
        NumericalError: a gradient holds NaN or Inf (parameters are left untouched)
    """
    bad = [name for name, g in grads.items() if not np.isfinite(g).all()]
    if bad:
        raise NumericalError("Non-finite gradients", {"parameters": bad, "update": state.step + 1})

    state.step += 1
    t = state.step
    correction1 = 1.0 - state.beta1 ** t
    correction2 = 1.0 - state.beta2 ** t
    for name, tensor in params.named():
        g = grads.get(name)
        if g is None:
            continue
        dtype = tensor.data.dtype.type
        m = state.first_moment[name]
        v = state.second_moment[name]
        m *= dtype(state.beta1)
        m += dtype(1.0 - state.beta1) * g
        v *= dtype(state.beta2)
        v += dtype(1.0 - state.beta2) * np.square(g)
        m_hat = m / dtype(correction1)
        v_hat = v / dtype(correction2)
        tensor.data -= dtype(lr) * m_hat / (np.sqrt(v_hat) + dtype(state.eps))
