import numpy as np
import pytest

from fairforge.errors import DimensionError
from fairforge.model.autodiff import (
    Tensor,
    binary_cross_entropy,
    gelu,
    layer_norm,
    masked_softmax,
    parameter,
    relu,
    sigmoid,
    take_rows,
    total,
)


def numeric_gradient(fn, value, eps=1e-6):
    """Central differences of a scalar function of one array."""
    grad = np.zeros_like(value)
    for index in np.ndindex(value.shape):
        shifted = value.copy()
        shifted[index] += eps
        upper = fn(shifted)
        shifted[index] -= 2 * eps
        lower = fn(shifted)
        grad[index] = (upper - lower) / (2 * eps)
    return grad


def check_gradient(build, value, weights=None, rtol=1e-5, atol=1e-7):
    """Compare the tape gradient of sum(weights * build(x)) with finite differences."""
    rng = np.random.default_rng(0)
    trial = build(Tensor(value)).data
    w = rng.normal(size=trial.shape) if weights is None else weights

    def scalar(x):
        return float((build(Tensor(x)).data * w).sum())

    x = parameter(value)
    (build(x) * w).sum().backward()
    np.testing.assert_allclose(x.grad, numeric_gradient(scalar, value), rtol=rtol, atol=atol)


class TestArithmetic:
    """Elementwise and matrix operators."""

    def test_broadcast_add_and_mul(self):
        rng = np.random.default_rng(1)
        bias = rng.normal(size=(1, 3))
        check_gradient(lambda x: (x + bias) * (x - 2.0), rng.normal(size=(4, 3)))

    def test_gradient_reaches_broadcast_operand(self):
        x = parameter(np.ones((1, 3)))
        (Tensor(np.arange(6.0).reshape(2, 3)) * x).sum().backward()
        np.testing.assert_allclose(x.grad, [[3.0, 5.0, 7.0]])

    def test_batched_matmul(self):
        rng = np.random.default_rng(2)
        other = rng.normal(size=(2, 3, 4))
        check_gradient(lambda x: x @ other, rng.normal(size=(2, 5, 3)))
        left = rng.normal(size=(2, 5, 3))
        check_gradient(lambda x: Tensor(left) @ x, other)

    def test_shape_operators(self):
        rng = np.random.default_rng(3)
        check_gradient(lambda x: x.reshape(3, 4).transpose(1, 0).mean(axis=0),
                       rng.normal(size=(2, 6)))

    def test_reused_node_accumulates(self):
        x = parameter(np.array([2.0, -1.0]))
        y = x * x
        (y + y).sum().backward()
        np.testing.assert_allclose(x.grad, [8.0, -4.0])

    def test_constants_get_no_gradient(self):
        c = Tensor(np.ones(3))
        x = parameter(np.ones(3))
        (c * x).sum().backward()
        assert c.grad is None
        assert not c.requires_grad


class TestFusedOperators:
    """Gradients of the transformer's building blocks."""

    def test_layer_norm(self):
        check_gradient(layer_norm, np.random.default_rng(4).normal(size=(3, 5)))

    def test_layer_norm_output(self):
        out = layer_norm(Tensor(np.array([[1.0, 2.0, 3.0, 4.0]]))).data
        assert out.mean() == pytest.approx(0.0, abs=1e-12)
        assert out.var() == pytest.approx(1.0, rel=1e-4)

    def test_gelu(self):
        check_gradient(gelu, np.linspace(-3.0, 3.0, 7).reshape(7, 1))

    def test_relu(self):
        check_gradient(relu, np.array([-1.5, -0.2, 0.3, 2.0]))

    def test_sigmoid(self):
        check_gradient(sigmoid, np.linspace(-4.0, 4.0, 9))

    def test_masked_softmax(self):
        allowed = np.array([[True, True, False], [True, False, True]])
        check_gradient(lambda x: masked_softmax(x, allowed),
                       np.random.default_rng(5).normal(size=(2, 3)))

    def test_masked_positions_are_zero(self):
        allowed = np.array([[True, False, True]])
        out = masked_softmax(Tensor(np.array([[1.0, 50.0, 1.0]])), allowed).data
        np.testing.assert_allclose(out, [[0.5, 0.0, 0.5]])

    def test_take_rows(self):
        rows = np.array([2, 0, 2])
        check_gradient(lambda x: take_rows(x, rows), np.random.default_rng(6).normal(size=(3, 2)))


class TestBinaryCrossEntropy:
    """Clamped BCE."""

    def test_value(self):
        value = binary_cross_entropy(Tensor(np.array([0.8, 0.4])), np.array([1.0, 0.0])).data
        assert float(value) == pytest.approx(-(np.log(0.8) + np.log(0.6)) / 2)

    def test_gradient(self):
        targets = np.array([1.0, 0.0, 1.0])
        check_gradient(lambda p: binary_cross_entropy(p, targets),
                       np.array([0.3, 0.6, 0.9]), weights=np.array(1.0))

    def test_clamped_entries_pass_no_gradient(self):
        p = parameter(np.array([0.0, 0.5]))
        binary_cross_entropy(p, np.array([1.0, 1.0])).backward()
        assert p.grad[0] == 0.0
        assert np.isfinite(p.grad).all()

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            binary_cross_entropy(Tensor(np.ones(3) * 0.5), np.ones(2))


def test_total_sums_scalars():
    a, b = parameter(np.array(1.5)), parameter(np.array(-0.5))
    out = total([a * 2.0, b])
    out.backward()
    assert float(out.data) == 2.5
    assert float(a.grad) == 2.0
    assert float(b.grad) == 1.0
