"""Tests for the tensor tape and its primitives."""
import numpy as np
import pytest

from src.autograd import (
    Tape,
    backward,
    constant,
    gradient_check,
    high_precision,
    no_grad,
    parameter,
)
from src.autograd import ops
from src.utils.errors import ShapeError, TapeError

TOLERANCE = 1e-5


def _random(shape, seed=0, scale=1.0):
    return np.random.default_rng(seed).standard_normal(shape) * scale


def _check(build, params):
    errors = gradient_check(build, params)
    assert max(errors.values()) <= TOLERANCE, errors


def test_sigmoid_of_zero():
    assert ops.sigmoid(constant([[0.0]])).data[0, 0] == pytest.approx(0.5)


def test_l2_normalize_rows_values():
    out = ops.l2_normalize_rows(constant([[3.0, 4.0]]))
    np.testing.assert_allclose(out.data, [[0.6, 0.8]], rtol=1e-6)


def test_l2_normalize_zero_row_stays_zero():
    out = ops.l2_normalize_rows(constant([[0.0, 0.0], [1.0, 0.0]]))
    np.testing.assert_array_equal(out.data, [[0.0, 0.0], [1.0, 0.0]])


def test_matmul_values():
    out = ops.matmul(constant([[1.0, 2.0]]), constant([[3.0], [4.0]]))
    assert out.data[0, 0] == pytest.approx(11.0)


def test_sum_of_parameter_has_unit_gradient():
    x = parameter(_random((3, 4)))
    with Tape() as tape:
        loss = ops.sum(x)
    grads = tape.backward(loss)
    np.testing.assert_array_equal(grads[x], np.ones((3, 4)))


def test_unused_parameter_gets_zero_gradient():
    x = parameter(_random((2, 2)))
    y = parameter(_random((2, 2), seed=1))
    with Tape() as tape:
        loss = ops.sum(ops.add(ops.scale(x, 0.0), y))
    grads = tape.backward(loss)
    np.testing.assert_array_equal(grads[x], np.zeros((2, 2)))
    np.testing.assert_array_equal(grads[y], np.ones((2, 2)))


def test_non_scalar_loss_rejected():
    x = parameter(_random((2, 2)))
    with Tape() as tape:
        out = ops.tanh(x)
    with pytest.raises(ShapeError):
        tape.backward(out)


def test_empty_tape_rejected():
    tape = Tape()
    with pytest.raises(TapeError):
        tape.backward(constant(1.0))


def test_untracked_loss_rejected():
    with pytest.raises(TapeError):
        backward(constant(1.0))


def test_shape_error_names_operation():
    with pytest.raises(ShapeError) as info:
        ops.matmul(constant(np.ones((2, 3))), constant(np.ones((2, 3))))
    assert info.value.op == "matmul"
    assert "matmul" in str(info.value)


def test_only_row_vectors_broadcast():
    matrix = constant(np.ones((3, 4)))
    ops.add(matrix, constant(np.ones((1, 4))))
    with pytest.raises(ShapeError):
        ops.add(matrix, constant(np.ones((3, 1))))
    with pytest.raises(ShapeError):
        ops.mul(matrix, constant(np.ones((1, 4))))


def test_hinge_subgradient_at_zero_is_zero():
    x = parameter([[0.0, 1.0, -1.0]])
    with Tape() as tape:
        loss = ops.sum(ops.hinge(x))
    grads = tape.backward(loss)
    np.testing.assert_array_equal(grads[x], [[0.0, 1.0, 0.0]])


def test_row_max_ties_resolve_to_first_column():
    x = parameter([[2.0, 2.0, 1.0], [0.0, 3.0, 3.0]])
    with Tape() as tape:
        values, idx = ops.row_max(x)
        loss = ops.sum(values)
    grads = tape.backward(loss)
    np.testing.assert_array_equal(idx, [0, 1])
    np.testing.assert_array_equal(grads[x], [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def test_no_grad_records_nothing():
    x = parameter(_random((2, 2)))
    with Tape() as tape:
        with no_grad():
            ops.tanh(x)
    assert len(tape) == 0


def test_backward_is_bit_identical_on_replay():
    x = parameter(_random((4, 3)))
    w = parameter(_random((3, 2), seed=1))
    with Tape() as tape:
        loss = ops.sum(ops.tanh(ops.matmul(x, w)))
    first = {k: v.copy() for k, v in tape.backward(loss).items()}
    second = tape.backward(loss)
    for leaf, grad in first.items():
        assert np.array_equal(grad, second[leaf])


def test_reused_tensor_accumulates():
    x = parameter([[1.0, 2.0]])
    with Tape() as tape:
        loss = ops.sum(ops.mul(x, x))
    np.testing.assert_allclose(tape.backward(loss)[x], [[2.0, 4.0]])


def test_high_precision_scope():
    with high_precision():
        assert parameter([1.0]).data.dtype == np.float64
    assert parameter([1.0]).data.dtype == np.float32


# Finite-difference checks, one per primitive, in double precision.

def test_gradcheck_matmul():
    with high_precision():
        a = parameter(_random((3, 4)), name="a")
        b = parameter(_random((4, 2), seed=1), name="b")
    _check(lambda: ops.sum(ops.matmul(a, b)), [a, b])


def test_gradcheck_add_sub_with_row_broadcast():
    with high_precision():
        a = parameter(_random((3, 4)), name="a")
        b = parameter(_random((1, 4), seed=1), name="b")
        c = parameter(_random((3, 4), seed=2), name="c")
    _check(lambda: ops.sum(ops.tanh(ops.sub(ops.add(a, b), c))), [a, b, c])


def test_gradcheck_mul_scale_shift():
    with high_precision():
        a = parameter(_random((2, 3)), name="a")
        b = parameter(_random((2, 3), seed=1), name="b")
    _check(lambda: ops.sum(ops.shift(ops.scale(ops.mul(a, b), -1.5), 0.3)), [a, b])


def test_gradcheck_sigmoid_tanh():
    with high_precision():
        x = parameter(_random((3, 3)), name="x")
        w = constant(_random((3, 3), seed=4))
    _check(lambda: ops.sum(ops.mul(ops.sigmoid(ops.tanh(x)), w)), [x])


def test_gradcheck_concat_columns_transpose():
    with high_precision():
        a = parameter(_random((2, 3)), name="a")
        b = parameter(_random((2, 2), seed=1), name="b")
        w = constant(_random((2, 5), seed=7))

    def build():
        joined = ops.concat([a, b], axis=1)
        picked = ops.columns(ops.mul(joined, w), 1, 4)
        return ops.sum(ops.tanh(ops.transpose(picked)))

    _check(build, [a, b])


def test_gradcheck_embedding_with_repeated_ids():
    with high_precision():
        table = parameter(_random((5, 3)), name="table")
        w = constant(_random((4, 3), seed=2))
    ids = np.array([1, 3, 1, 0])
    _check(lambda: ops.sum(ops.mul(ops.embedding(table, ids), w)), [table])


def test_gradcheck_l2_normalize_rows():
    with high_precision():
        x = parameter(_random((3, 4)), name="x")
        w = constant(_random((3, 4), seed=3))
    _check(lambda: ops.sum(ops.mul(ops.l2_normalize_rows(x), w)), [x])


def test_gradcheck_hinge_row_max_diagonal_away_from_kinks():
    with high_precision():
        x = parameter(_random((4, 4), seed=5), name="x")

    def build():
        values, _ = ops.row_max(ops.hinge(x))
        return ops.add(ops.sum(values), ops.sum(ops.diagonal(x)))

    _check(build, [x])


def test_gradcheck_row_sum_and_mean():
    with high_precision():
        x = parameter(_random((3, 5)), name="x")
    _check(lambda: ops.mean(ops.tanh(ops.sum(x, axis=1))), [x])
