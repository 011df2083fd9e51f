"""Autodiff engine: per-op gradients vs finite differences, op semantics."""

import numpy as np
import pytest

from dphgnn.autodiff import (
    Tensor,
    add,
    backward,
    concat_cols,
    concat_rows,
    cross_entropy,
    dropout,
    grad_check,
    leaky_relu,
    matmul,
    mul,
    relu,
    scale,
    select_cols,
    select_rows,
    sigmoid,
    softmax_rows,
    sub,
    sum_all,
    transpose,
)
from dphgnn.errors import EmptyMaskError, NonScalarLossError
from dphgnn.sparse import SparseMatrix


def param(rng, *shape):
    return Tensor(rng.standard_normal(shape), requires_grad=True)


def test_scalar_square_gradient():
    w = Tensor(np.array([[3.0]]), requires_grad=True)
    err = grad_check(lambda: sum_all(mul(w, w)), {"w": w})
    assert err < 1e-9
    w.zero_grad()
    backward(sum_all(mul(w, w)))
    assert w.grad[0, 0] == pytest.approx(6.0, abs=1e-12)


def test_linear_map_gradient_is_outer_product():
    rng = np.random.default_rng(0)
    W = param(rng, 3, 4)
    x = Tensor(rng.standard_normal((4, 1)))
    backward(sum_all(matmul(W, x)))
    np.testing.assert_allclose(W.grad, np.ones((3, 1)) @ x.value.T, atol=1e-12)


def test_dead_relu_zero_gradient():
    rng = np.random.default_rng(1)
    x = param(rng, 2, 3)
    loss = sum_all(relu(scale(mul(x, x), -1.0)))  # relu(-x^2) is identically 0
    backward(loss)
    np.testing.assert_array_equal(x.grad, np.zeros((2, 3)))
    err = grad_check(lambda: sum_all(relu(scale(mul(x, x), -1.0))), {"x": x})
    assert err == 0.0


def test_constant_function_zero_error():
    rng = np.random.default_rng(2)
    x = param(rng, 2, 2)
    c = Tensor(np.ones((2, 2)))
    assert grad_check(lambda: sum_all(c), {"x": x}) == 0.0


@pytest.mark.parametrize(
    "name,f",
    [
        ("add", lambda a, b: add(a, b)),
        ("sub", lambda a, b: sub(a, b)),
        ("mul", lambda a, b: mul(a, b)),
        ("matmul", lambda a, b: matmul(a, b)),
        ("concat_cols", lambda a, b: concat_cols(a, b)),
        ("concat_rows", lambda a, b: concat_rows(a, b)),
    ],
)
def test_binary_op_gradients(name, f):
    rng = np.random.default_rng(3)
    a = param(rng, 4, 4)
    b = param(rng, 4, 4)
    err = grad_check(lambda: sum_all(mul(f(a, b), f(a, b))), {"a": a, "b": b})
    assert err < 1e-6, name


@pytest.mark.parametrize(
    "name,f",
    [
        ("relu", relu),
        ("leaky_relu", leaky_relu),
        ("sigmoid", sigmoid),
        ("scale", lambda t: scale(t, -1.7)),
        ("transpose", transpose),
        ("softmax", softmax_rows),
    ],
)
def test_unary_op_gradients(name, f):
    rng = np.random.default_rng(4)
    x = param(rng, 3, 5)
    weight = Tensor(rng.standard_normal((3, 5)) if name != "transpose" else rng.standard_normal((5, 3)))
    err = grad_check(lambda: sum_all(mul(f(x), weight)), {"x": x})
    assert err < 1e-6, name


def test_select_ops_gradients():
    rng = np.random.default_rng(5)
    x = param(rng, 6, 5)
    rows = np.array([0, 2, 2, 5])
    cols = np.array([1, 3])
    err = grad_check(
        lambda: sum_all(mul(select_rows(x, rows), select_rows(x, rows))), {"x": x}
    )
    assert err < 1e-6
    err = grad_check(
        lambda: sum_all(mul(select_cols(x, cols), select_cols(x, cols))), {"x": x}
    )
    assert err < 1e-6


def test_add_broadcasts_bias_row():
    rng = np.random.default_rng(6)
    x = param(rng, 4, 3)
    b = param(rng, 1, 3)
    loss = sum_all(mul(add(x, b), add(x, b)))
    backward(loss)
    assert b.grad.shape == (1, 3)
    err = grad_check(lambda: sum_all(mul(add(x, b), add(x, b))), {"x": x, "b": b})
    assert err < 1e-6


def test_hadamard_with_ones_is_identity():
    rng = np.random.default_rng(7)
    x = Tensor(rng.standard_normal((3, 4)))
    np.testing.assert_array_equal(mul(x, Tensor(np.ones((3, 4)))).value, x.value)


def test_sparse_const_matmul_matches_dense():
    rng = np.random.default_rng(8)
    dense = rng.standard_normal((5, 4))
    dense[rng.random((5, 4)) > 0.4] = 0.0
    sp = SparseMatrix.from_dense(dense)
    x = param(rng, 4, 3)
    y = Tensor(x.value.copy(), requires_grad=True)

    out_sparse = sum_all(mul(matmul(sp, x), matmul(sp, x)))
    backward(out_sparse)
    grad_sparse = x.grad.copy()

    out_dense = sum_all(mul(matmul(Tensor(dense), y), matmul(Tensor(dense), y)))
    backward(out_dense)
    np.testing.assert_allclose(grad_sparse, y.grad, atol=1e-12)


def test_softmax_rows_semantics():
    rng = np.random.default_rng(9)
    x = Tensor(rng.standard_normal((4, 6)))
    out = softmax_rows(x)
    np.testing.assert_allclose(out.value.sum(axis=1), np.ones(4), atol=1e-12)
    const = softmax_rows(Tensor(np.full((2, 5), 3.7)))
    np.testing.assert_allclose(const.value, np.full((2, 5), 0.2), atol=1e-12)


def test_softmax_rows_masked():
    x = Tensor(np.zeros((2, 4)))
    mask = np.array([[True, True, False, False], [False, True, True, True]])
    out = softmax_rows(x, mask=mask)
    np.testing.assert_allclose(
        out.value, [[0.5, 0.5, 0.0, 0.0], [0.0, 1 / 3, 1 / 3, 1 / 3]], atol=1e-12
    )
    with pytest.raises(EmptyMaskError):
        softmax_rows(x, mask=np.zeros((2, 4), dtype=bool))


def test_masked_softmax_gradient():
    rng = np.random.default_rng(10)
    x = param(rng, 3, 5)
    mask = rng.random((3, 5)) < 0.6
    mask[:, 0] = True  # keep every row non-empty
    weight = Tensor(rng.standard_normal((3, 5)))
    err = grad_check(lambda: sum_all(mul(softmax_rows(x, mask=mask), weight)), {"x": x})
    assert err < 1e-6


def test_dropout_semantics():
    rng = np.random.default_rng(11)
    x = Tensor(rng.standard_normal((50, 20)))
    assert dropout(x, 0.0, rng=0, train=True) is x
    assert dropout(x, 0.5, rng=0, train=False) is x
    out = dropout(x, 0.5, rng=np.random.default_rng(0), train=True)
    kept = out.value != 0.0
    # survivors are scaled by 1/(1-p)
    np.testing.assert_allclose(out.value[kept], x.value[kept] * 2.0, atol=1e-12)
    frac = kept.mean()
    assert 0.4 < frac < 0.6


def test_dropout_deterministic_by_seed():
    x = Tensor(np.ones((10, 10)))
    a = dropout(x, 0.3, rng=np.random.default_rng(7), train=True)
    b = dropout(x, 0.3, rng=np.random.default_rng(7), train=True)
    np.testing.assert_array_equal(a.value, b.value)


def test_concat_cols_left_block():
    rng = np.random.default_rng(12)
    a = Tensor(rng.standard_normal((3, 2)))
    b = Tensor(rng.standard_normal((3, 4)))
    out = concat_cols(a, b)
    assert out.value.shape == (3, 6)
    np.testing.assert_array_equal(out.value[:, :2], a.value)


def test_cross_entropy_pinned_values():
    labels = np.array([0, 1])
    mask = np.ones(2, dtype=bool)
    loss = cross_entropy(Tensor(np.zeros((2, 2))), labels, mask)
    assert float(loss.value) == pytest.approx(np.log(2.0), abs=1e-12)

    one_node = cross_entropy(
        Tensor(np.array([[1.0, 0.0, 0.0]])), np.array([0]), np.array([True])
    )
    assert float(one_node.value) == pytest.approx(-np.log(np.e / (np.e + 2.0)), abs=1e-9)

    big_margin = cross_entropy(
        Tensor(np.array([[500.0, 0.0]])), np.array([0]), np.array([True])
    )
    assert float(big_margin.value) == pytest.approx(0.0, abs=1e-12)


def test_cross_entropy_masked_mean_and_gradient():
    rng = np.random.default_rng(13)
    logits = param(rng, 5, 3)
    labels = rng.integers(0, 3, size=5)
    mask = np.array([True, False, True, True, False])

    # oracle: mean over masked rows of log-sum-exp minus true logit
    vals = logits.value
    lse = np.log(np.exp(vals).sum(axis=1))
    per_row = lse - vals[np.arange(5), labels]
    expected = per_row[mask].mean()
    loss = cross_entropy(logits, labels, mask)
    assert float(loss.value) == pytest.approx(expected, abs=1e-10)

    err = grad_check(lambda: cross_entropy(logits, labels, mask), {"logits": logits})
    assert err < 1e-6

    backward(cross_entropy(logits, labels, mask))
    assert np.all(logits.grad[~mask] == 0.0)

    with pytest.raises(EmptyMaskError):
        cross_entropy(logits, labels, np.zeros(5, dtype=bool))


def test_two_layer_mlp_finite_differences():
    rng = np.random.default_rng(14)
    x = Tensor(rng.standard_normal((6, 4)))
    w1 = param(rng, 4, 5)
    w2 = param(rng, 5, 3)
    labels = rng.integers(0, 3, size=6)
    mask = np.ones(6, dtype=bool)

    def loss():
        return cross_entropy(matmul(relu(matmul(x, w1)), w2), labels, mask)

    assert grad_check(loss, {"w1": w1, "w2": w2}) < 1e-4


def test_backward_requires_scalar():
    with pytest.raises(NonScalarLossError):
        backward(Tensor(np.zeros((2, 2)), requires_grad=True))


def test_gradient_accumulation_and_zero_grad():
    w = Tensor(np.array([[2.0]]), requires_grad=True)
    backward(sum_all(mul(w, w)))
    backward(sum_all(mul(w, w)))
    assert w.grad[0, 0] == pytest.approx(8.0)
    w.zero_grad()
    assert w.grad is None


def test_segment_softmax_matches_rowwise():
    from dphgnn.autodiff import segment_softmax

    rng = np.random.default_rng(31)
    # two segments of sizes 3 and 2
    x = param(rng, 5, 1)
    indptr = np.array([0, 3, 5])
    out = segment_softmax(x, indptr).value[:, 0]
    flat = x.value[:, 0]
    for lo, hi in ((0, 3), (3, 5)):
        e = np.exp(flat[lo:hi] - flat[lo:hi].max())
        np.testing.assert_allclose(out[lo:hi], e / e.sum(), atol=1e-12)
    assert out[:3].sum() == pytest.approx(1.0)
    assert out[3:].sum() == pytest.approx(1.0)


def test_segment_softmax_gradient():
    from dphgnn.autodiff import segment_softmax

    rng = np.random.default_rng(32)
    x = param(rng, 7, 1)
    weights = Tensor(rng.standard_normal((7, 1)))
    indptr = np.array([0, 2, 5, 7])

    def loss():
        return sum_all(mul(segment_softmax(x, indptr), weights))

    assert grad_check(loss, {"x": x}) < 1e-6


def test_segment_softmax_single_element_segments():
    from dphgnn.autodiff import segment_softmax

    x = Tensor(np.array([[5.0], [-2.0]]))
    out = segment_softmax(x, np.array([0, 1, 2]))
    np.testing.assert_array_equal(out.value, np.ones((2, 1)))


def test_segment_softmax_rejects_bad_segments():
    from dphgnn.autodiff import segment_softmax
    from dphgnn.errors import ShapeMismatchError

    x = Tensor(np.zeros((3, 1)))
    with pytest.raises(EmptyMaskError):
        segment_softmax(x, np.array([0, 1, 1, 3]))
    with pytest.raises(ShapeMismatchError):
        segment_softmax(x, np.array([0, 2]))
    with pytest.raises(ShapeMismatchError):
        segment_softmax(Tensor(np.zeros((3, 2))), np.array([0, 3]))


def test_segment_sums_values_and_gradient():
    from dphgnn.autodiff import segment_sums

    rng = np.random.default_rng(33)
    x = param(rng, 6, 3)
    indptr = np.array([0, 2, 3, 6])
    out = segment_sums(x, indptr)
    expected = np.vstack([
        x.value[0:2].sum(axis=0),
        x.value[2:3].sum(axis=0),
        x.value[3:6].sum(axis=0),
    ])
    np.testing.assert_allclose(out.value, expected, atol=1e-12)

    weights = Tensor(rng.standard_normal((3, 3)))

    def loss():
        return sum_all(mul(segment_sums(x, indptr), weights))

    assert grad_check(loss, {"x": x}) < 1e-7
    x.zero_grad()
    backward(sum_all(segment_sums(x, indptr)))
    np.testing.assert_array_equal(x.grad, np.ones((6, 3)))
