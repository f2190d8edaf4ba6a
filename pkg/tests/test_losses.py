"""Loss values and gradients against naive re-implementations."""

import numpy as np
import pytest

import oracles
from dyadicbp import LossKind, LossSpec, NumericError, ShapeError


def test_mse_value_and_gradient_match_naive():
    rng = np.random.default_rng(31)
    for _ in range(50):
        dim = int(rng.integers(1, 9))
        y = rng.standard_normal(dim)
        out = rng.standard_normal(dim)
        loss = LossSpec(LossKind.MSE, y)
        assert abs(loss.value(out) - oracles.loss_value(LossKind.MSE, out, y)) <= 1e-14
        np.testing.assert_allclose(
            loss.gradient(out),
            oracles.loss_gradient(LossKind.MSE, out, y),
            rtol=0,
            atol=1e-14,
        )


def test_cross_entropy_value_and_gradient_match_naive():
    rng = np.random.default_rng(32)
    kind = LossKind.SOFTMAX_CROSS_ENTROPY
    for _ in range(50):
        dim = int(rng.integers(2, 9))
        y = np.zeros(dim)
        y[int(rng.integers(dim))] = 1.0
        out = 3.0 * rng.standard_normal(dim)
        loss = LossSpec(kind, y)
        assert abs(loss.value(out) - oracles.loss_value(kind, out, y)) <= 1e-12
        np.testing.assert_allclose(
            loss.gradient(out), oracles.loss_gradient(kind, out, y), rtol=0, atol=1e-12
        )


def test_cross_entropy_gradient_sums_to_zero():
    # softmax probabilities and the target both sum to one.
    rng = np.random.default_rng(33)
    y = np.zeros(5)
    y[2] = 1.0
    loss = LossSpec(LossKind.SOFTMAX_CROSS_ENTROPY, y)
    g = loss.gradient(rng.standard_normal(5))
    assert abs(g.sum()) <= 1e-12


def test_loss_gradient_matches_finite_differences():
    rng = np.random.default_rng(34)
    h = 1e-6
    for kind in LossKind:
        dim = 6
        if kind is LossKind.MSE:
            y = rng.standard_normal(dim)
        else:
            y = np.zeros(dim)
            y[1] = 1.0
        loss = LossSpec(kind, y)
        out = rng.standard_normal(dim)
        grad = loss.gradient(out)
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = h
            fd = (loss.value(out + e) - loss.value(out - e)) / (2 * h)
            assert abs(grad[i] - fd) <= 1e-8


def test_batched_loss_matches_per_column():
    rng = np.random.default_rng(35)
    for kind in LossKind:
        dim, batch = 4, 6
        if kind is LossKind.MSE:
            targets = rng.standard_normal((dim, batch))
        else:
            targets = np.zeros((dim, batch))
            targets[rng.integers(dim, size=batch), np.arange(batch)] = 1.0
        outs = rng.standard_normal((dim, batch))
        loss = LossSpec(kind, targets)
        values = loss.value(outs)
        grads = loss.gradient(outs)
        assert values.shape == (batch,)
        for j in range(batch):
            single = LossSpec(kind, targets[:, j])
            assert abs(values[j] - single.value(outs[:, j])) <= 1e-12
            np.testing.assert_allclose(
                grads[:, j], single.gradient(outs[:, j]), rtol=0, atol=1e-12
            )


def test_mse_zero_residual_gives_zero_loss_and_gradient():
    y = np.array([0.5, -1.0, 2.0])
    loss = LossSpec(LossKind.MSE, y)
    assert loss.value(y) == 0.0
    np.testing.assert_array_equal(loss.gradient(y), np.zeros(3))


def test_cross_entropy_target_validation():
    with pytest.raises(ValueError):
        LossSpec(LossKind.SOFTMAX_CROSS_ENTROPY, np.array([0.5, 0.2]))
    with pytest.raises(ValueError):
        LossSpec(LossKind.SOFTMAX_CROSS_ENTROPY, np.array([1.5, -0.5]))
    LossSpec(LossKind.SOFTMAX_CROSS_ENTROPY, np.array([0.25, 0.75]))


def test_target_shape_and_finiteness_validation():
    loss = LossSpec(LossKind.MSE, np.zeros(3))
    with pytest.raises(ShapeError):
        loss.value(np.zeros(4))
    with pytest.raises(ShapeError):
        loss.gradient(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        LossSpec(LossKind.MSE, np.array([np.nan, 0.0]))
    with pytest.raises(ShapeError):
        LossSpec(LossKind.MSE, np.zeros((2, 2, 2)))


def test_non_finite_output_raises_numeric_error():
    loss = LossSpec(LossKind.MSE, np.zeros(2))
    with pytest.raises(NumericError):
        loss.value(np.array([np.inf, 0.0]))
    with pytest.raises(NumericError):
        loss.gradient(np.array([np.nan, 0.0]))


def test_loss_kind_from_name():
    assert LossKind.from_name("mse") is LossKind.MSE
    assert LossKind.from_name("SoftmaxCrossEntropy") is LossKind.SOFTMAX_CROSS_ENTROPY
    with pytest.raises(ValueError):
        LossKind.from_name("hinge")
