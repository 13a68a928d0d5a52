"""Differentiable primitives over dense tensors.

This is exactly the closure needed by the sentence/image encoders and the
ranking losses. Shapes must conform; the only broadcasting allowed is a row
vector added to (or subtracted from) every row of a matrix.
"""
from typing import Optional, Sequence, Tuple

import numpy as np

from ..utils.errors import ShapeError
from .tensor import Tensor, active_tape


def _emit(op: str, data: np.ndarray, inputs: Sequence[Tensor], backward) -> Tensor:
    out = Tensor(data)
    tape = active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        tape.record(op, out, inputs, backward)
    return out


def _is_row_vector_for(vector: Tensor, matrix: Tensor) -> bool:
    if matrix.ndim != 2:
        return False
    width = matrix.shape[1]
    return vector.shape == (width,) or vector.shape == (1, width)


def _elementwise_shapes(op: str, a: Tensor, b: Tensor, allow_row: bool) -> bool:
    """Validate operand shapes; return True when ``b`` is broadcast over rows."""
    if a.shape == b.shape:
        return False
    if allow_row and _is_row_vector_for(b, a):
        return True
    raise ShapeError(op, a.shape, b.shape)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of two 2-D tensors."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape)
    a_data, b_data = a.data, b.data

    def backward(g):
        return g @ b_data.T, a_data.T @ g

    return _emit("matmul", a_data @ b_data, (a, b), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; ``b`` may be a row vector broadcast over the rows of ``a``."""
    broadcast = _elementwise_shapes("add", a, b, allow_row=True)
    b_shape = b.shape

    def backward(g):
        if broadcast:
            return g, g.sum(axis=0).reshape(b_shape)
        return g, g

    return _emit("add", a.data + b.data, (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise difference; ``b`` may be a broadcast row vector."""
    broadcast = _elementwise_shapes("sub", a, b, allow_row=True)
    b_shape = b.shape

    def backward(g):
        if broadcast:
            return g, -g.sum(axis=0).reshape(b_shape)
        return g, -g

    return _emit("sub", a.data - b.data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise (Hadamard) product of equally shaped tensors."""
    _elementwise_shapes("mul", a, b, allow_row=False)
    a_data, b_data = a.data, b.data

    def backward(g):
        return g * b_data, g * a_data

    return _emit("mul", a_data * b_data, (a, b), backward)


def scale(x: Tensor, factor: float) -> Tensor:
    """Multiply by a scalar constant."""
    factor = float(factor)

    def backward(g):
        return (g * factor,)

    return _emit("scale", x.data * factor, (x,), backward)


def shift(x: Tensor, offset: float) -> Tensor:
    """Add a scalar constant."""

    def backward(g):
        return (g,)

    return _emit("shift", x.data + float(offset), (x,), backward)


def sigmoid(x: Tensor) -> Tensor:
    # 0.5 * (1 + tanh(x / 2)) is overflow free and gives exactly 0.5 at 0
    y = 0.5 * (1.0 + np.tanh(0.5 * x.data))

    def backward(g):
        return (g * y * (1.0 - y),)

    return _emit("sigmoid", y, (x,), backward)


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)

    def backward(g):
        return (g * (1.0 - y * y),)

    return _emit("tanh", y, (x,), backward)


def concat(tensors: Sequence[Tensor], axis: int = 1) -> Tensor:
    """Concatenate 2-D tensors along ``axis``."""
    tensors = tuple(tensors)
    if not tensors:
        raise ShapeError("concat", (), detail="nothing to concatenate")
    first = tensors[0]
    for t in tensors[1:]:
        other_axis = 1 - axis
        if t.ndim != 2 or first.ndim != 2 or t.shape[other_axis] != first.shape[other_axis]:
            raise ShapeError("concat", first.shape, t.shape)
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.ascontiguousarray(part) for part in np.split(g, bounds, axis=axis))

    return _emit("concat", np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


def columns(x: Tensor, start: int, stop: int) -> Tensor:
    """Column block ``x[:, start:stop]`` of a matrix."""
    if x.ndim != 2 or not 0 <= start < stop <= x.shape[1]:
        raise ShapeError("columns", x.shape, detail=f"slice [{start}:{stop}]")
    shape, dtype = x.shape, x.data.dtype

    def backward(g):
        full = np.zeros(shape, dtype=dtype)
        full[:, start:stop] = g
        return (full,)

    return _emit("columns", x.data[:, start:stop], (x,), backward)


def transpose(x: Tensor) -> Tensor:
    if x.ndim != 2:
        raise ShapeError("transpose", x.shape)

    def backward(g):
        return (np.ascontiguousarray(g.T),)

    return _emit("transpose", np.ascontiguousarray(x.data.T), (x,), backward)


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Rows of ``table`` selected by integer ``ids`` (1-D)."""
    ids = np.asarray(ids, dtype=np.int64)
    if table.ndim != 2 or ids.ndim != 1:
        raise ShapeError("embedding", table.shape, ids.shape)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ShapeError("embedding", table.shape, ids.shape, detail="token id out of range")
    shape, dtype = table.shape, table.data.dtype

    def backward(g):
        full = np.zeros(shape, dtype=dtype)
        np.add.at(full, ids, g)
        return (full,)

    return _emit("embedding", table.data[ids], (table,), backward)


def l2_normalize_rows(x: Tensor) -> Tensor:
    """Scale each row to unit Euclidean norm; all-zero rows stay zero."""
    if x.ndim != 2:
        raise ShapeError("l2_normalize_rows", x.shape)
    norms = np.sqrt(np.sum(x.data * x.data, axis=1, keepdims=True))
    nonzero = norms > 0
    safe = np.where(nonzero, norms, 1.0)
    y = np.where(nonzero, x.data / safe, 0.0)

    def backward(g):
        proj = np.sum(g * y, axis=1, keepdims=True)
        return (np.where(nonzero, (g - y * proj) / safe, 0.0),)

    return _emit("l2_normalize_rows", y, (x,), backward)


def hinge(x: Tensor) -> Tensor:
    """max(0, x); the subgradient at exactly 0 is 0."""
    active = x.data > 0

    def backward(g):
        return (g * active,)

    return _emit("hinge", np.where(active, x.data, 0.0), (x,), backward)


def row_max(x: Tensor) -> Tuple[Tensor, np.ndarray]:
    """
    Maximum of every row.

    The gradient flows only to the argmax entry; ties resolve to the lowest
    column index.

    Returns:
        (column tensor of shape (n, 1), argmax index per row)
    """
    if x.ndim != 2 or x.shape[1] == 0:
        raise ShapeError("row_max", x.shape)
    idx = np.argmax(x.data, axis=1)
    rows = np.arange(x.shape[0])
    shape, dtype = x.shape, x.data.dtype

    def backward(g):
        full = np.zeros(shape, dtype=dtype)
        full[rows, idx] = g[:, 0]
        return (full,)

    values = x.data[rows, idx].reshape(-1, 1)
    return _emit("row_max", values, (x,), backward), idx


def diagonal(x: Tensor) -> Tensor:
    """Main diagonal of a square matrix as an (n, 1) column."""
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ShapeError("diagonal", x.shape)
    n, dtype = x.shape[0], x.data.dtype

    def backward(g):
        full = np.zeros((n, n), dtype=dtype)
        full[np.arange(n), np.arange(n)] = g[:, 0]
        return (full,)

    return _emit("diagonal", np.ascontiguousarray(np.diagonal(x.data)).reshape(n, 1), (x,), backward)


def sum(x: Tensor, axis: Optional[int] = None) -> Tensor:  # noqa: A001 - mirrors numpy naming
    """
    Sum of all entries (scalar) or of each row (``axis=1``, shape (n, 1)).

    Row sums reduce each contiguous row with numpy's summation; the total is a
    single numpy reduction over the flattened data.
    """
    shape = x.shape
    if axis is None:
        def backward(g):
            return (np.full(shape, g.reshape(()), dtype=x.data.dtype),)

        return _emit("sum", np.sum(x.data.reshape(-1)), (x,), backward)
    if axis != 1 or x.ndim != 2:
        raise ShapeError("sum", shape, detail=f"axis={axis}")

    def backward_rows(g):
        return (np.repeat(g, shape[1], axis=1),)

    return _emit("sum", np.sum(x.data, axis=1, keepdims=True), (x,), backward_rows)


def mean(x: Tensor) -> Tensor:
    """Mean of all entries (scalar)."""
    size = x.data.size
    if size == 0:
        raise ShapeError("mean", x.shape, detail="empty tensor")

    def backward(g):
        return (np.full(x.shape, g.reshape(()) / size, dtype=x.data.dtype),)

    return _emit("mean", np.sum(x.data.reshape(-1)) / size, (x,), backward)
