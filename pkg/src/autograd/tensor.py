"""Dense tensors and the operation tape for reverse-mode differentiation.

A ``Tape`` is an ordered record of primitive operations. Operations append to
the innermost active tape of the current thread whenever one of their inputs
requires gradients; since every output is created after its inputs, the
recording order is already a topological order and backward simply replays it
in reverse.
"""
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.errors import ShapeError, TapeError

_state = threading.local()

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


def get_default_dtype() -> np.dtype:
    """Precision used for newly created tensors in this thread."""
    return getattr(_state, "dtype", np.dtype(np.float32))


@contextmanager
def high_precision() -> Iterator[None]:
    """Create tensors in double precision inside the block (gradient checks)."""
    previous = get_default_dtype()
    _state.dtype = np.dtype(np.float64)
    try:
        yield
    finally:
        _state.dtype = previous


def _tape_stack() -> List["Tape"]:
    if not hasattr(_state, "tapes"):
        _state.tapes = []
    return _state.tapes


def active_tape() -> Optional["Tape"]:
    """Innermost tape entered in this thread, if any."""
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """Dense real tensor, row-major.

    Tensors are hashed by identity so they can key gradient mappings.
    """

    __slots__ = ("data", "requires_grad", "grad", "name", "tape")

    def __init__(self, data, requires_grad: bool = False, name: str = "", dtype=None):
        self.data = np.asarray(data, dtype=dtype if dtype is not None else get_default_dtype(), order="C")
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        # tape that produced this tensor; None for leaves
        self.tape: Optional["Tape"] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        """Copy of the underlying values."""
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError("item", self.shape, detail="tensor is not scalar")
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}{label}, requires_grad={self.requires_grad})"


def parameter(data, name: str = "", dtype=None) -> Tensor:
    """Leaf tensor whose gradient is wanted."""
    return Tensor(data, requires_grad=True, name=name, dtype=dtype)


def constant(data) -> Tensor:
    """Leaf tensor that never receives a gradient."""
    return Tensor(data, requires_grad=False)


@dataclass
class Node:
    """One recorded primitive application."""
    op: str
    output: Tensor
    inputs: Tuple[Tensor, ...]
    backward: BackwardFn


class Tape:
    """Ordered record of primitive operations.

    Example:
        >>> with Tape() as tape:
        ...     loss = ops.sum(ops.mul(x, x))
        >>> grads = tape.backward(loss)
    """

    def __init__(self):
        self.nodes: List[Node] = []
        self._outputs: set = set()
        # leaf tensors requiring gradients, in first-use order
        self._leaves: Dict[int, Tensor] = {}

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, op: str, output: Tensor, inputs: Sequence[Tensor], backward: BackwardFn) -> None:
        output.requires_grad = True
        output.tape = self
        for tensor in inputs:
            if tensor.requires_grad and id(tensor) not in self._outputs:
                self._leaves.setdefault(id(tensor), tensor)
        self._outputs.add(id(output))
        self.nodes.append(Node(op, output, tuple(inputs), backward))

    def backward(self, loss: Tensor) -> Dict[Tensor, np.ndarray]:
        """
        Replay the tape in reverse and compute gradients of ``loss``.

        Each node is visited once. Gradients are recomputed from scratch on
        every call, so repeated calls return bit-identical results.

        Args:
            loss: Scalar tensor produced on this tape

        Returns:
            Mapping from every gradient-requiring leaf used on the tape to its
            gradient (zeros when the loss does not depend on it). The same
            arrays are stored in each leaf's ``grad``.
        """
        if loss.data.size != 1:
            raise ShapeError("backward", loss.shape, detail="loss must be a scalar")
        if not self.nodes:
            raise TapeError("backward called on an empty tape")
        if id(loss) not in self._outputs:
            raise TapeError("loss was not produced on this tape")

        grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for node in reversed(self.nodes):
            upstream = grads.pop(id(node.output), None)
            if upstream is None:
                continue
            for tensor, grad in zip(node.inputs, node.backward(upstream)):
                if grad is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                grads[key] = grads[key] + grad if key in grads else grad

        result: Dict[Tensor, np.ndarray] = {}
        for key, leaf in self._leaves.items():
            grad = grads.get(key)
            if grad is None:
                grad = np.zeros_like(leaf.data)
            grad = np.array(grad, dtype=leaf.data.dtype).reshape(leaf.shape)
            leaf.grad = grad
            result[leaf] = grad
        return result


def backward(loss: Tensor) -> Dict[Tensor, np.ndarray]:
    """Backward pass over the tape that produced ``loss``."""
    if loss.tape is None:
        if loss.data.size != 1:
            raise ShapeError("backward", loss.shape, detail="loss must be a scalar")
        raise TapeError("loss was not recorded on any tape")
    return loss.tape.backward(loss)


@contextmanager
def no_grad() -> Iterator[None]:
    """Suspend recording in this thread (inference, evaluation)."""
    stack = _tape_stack()
    stack.append(None)
    try:
        yield
    finally:
        stack.pop()
