"""Tests for tensor kernels and the reverse-mode tape."""

import math

import numpy as np
import pytest

from labelmend.errors import GraphError, NumericError, ShapeError
from labelmend.numerics import (
    Tape,
    avg_pool2x2,
    backward,
    conv2d,
    max_pool2x2,
    one_hot,
    softmax,
    softmax_cross_entropy,
    upsample2x,
)


def rel_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12))


def numeric_grad(f, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central finite differences of scalar f with respect to every entry of x."""
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = x[idx]
        x[idx] = old + eps
        plus = f()
        x[idx] = old - eps
        minus = f()
        x[idx] = old
        grad[idx] = (plus - minus) / (2 * eps)
    return grad


def test_conv_zero_input():
    """Test that a zero input with zero bias gives a zero output."""
    x = np.zeros((1, 3, 3))
    k = np.random.default_rng(0).standard_normal((2, 1, 3, 3))
    y, _ = conv2d(x, k, np.zeros(2))
    assert y.shape == (2, 3, 3)
    assert np.all(y == 0)


def test_conv_identity_kernel():
    """Test that a 1x1 unit kernel reproduces the input."""
    x = np.arange(9, dtype=np.float64).reshape(1, 3, 3)
    y, _ = conv2d(x, np.ones((1, 1, 1, 1)), np.zeros(1))
    assert np.array_equal(y, x)


def test_conv_all_ones_hand_case():
    """Test the all-ones 3x3 case: center 9, corner 4, edge 6."""
    y, _ = conv2d(np.ones((1, 3, 3)), np.ones((1, 1, 3, 3)), np.zeros(1))
    assert y[0, 1, 1] == 9
    assert y[0, 0, 0] == 4
    assert y[0, 0, 1] == 6


def test_conv_linearity(rng):
    """Test conv(a*x + b*y) == a*conv(x) + b*conv(y) for zero bias."""
    k = rng.standard_normal((3, 2, 3, 3))
    x = rng.standard_normal((2, 6, 6))
    z = rng.standard_normal((2, 6, 6))
    bias = np.zeros(3)
    lhs, _ = conv2d(2.5 * x - 0.5 * z, k, bias)
    a, _ = conv2d(x, k, bias)
    b, _ = conv2d(z, k, bias)
    assert np.allclose(lhs, 2.5 * a - 0.5 * b, atol=1e-6)


def test_conv_rejects_bad_shapes():
    """Test descriptive rejection of channel, kernel and bias mismatches."""
    x = np.zeros((2, 4, 4))
    with pytest.raises(ShapeError, match="channel"):
        conv2d(x, np.zeros((1, 3, 3, 3)), np.zeros(1))
    with pytest.raises(ShapeError, match="odd"):
        conv2d(x, np.zeros((1, 2, 2, 2)), np.zeros(1))
    with pytest.raises(ShapeError, match="bias"):
        conv2d(x, np.zeros((1, 2, 3, 3)), np.zeros(2))


def test_pool_and_upsample_shapes():
    """Test that pooling halves and upsampling doubles the spatial extents."""
    x = np.random.default_rng(0).standard_normal((2, 3, 8, 4))
    pooled, _ = max_pool2x2(x)
    assert pooled.shape == (2, 3, 4, 2)
    assert upsample2x(pooled).shape == x.shape
    assert avg_pool2x2(x).shape == (2, 3, 4, 2)


def test_pool_rejects_odd():
    """Test that odd spatial extents are rejected."""
    with pytest.raises(ShapeError):
        max_pool2x2(np.zeros((1, 5, 4)))
    with pytest.raises(ShapeError):
        avg_pool2x2(np.zeros((1, 4, 3)))


def test_softmax_rows_sum_to_one(rng):
    """Test that per-pixel class probabilities sum to one."""
    p = softmax(rng.standard_normal((2, 4, 5, 5)) * 10)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-6)


def test_cross_entropy_uniform_logits():
    """Test that equal logits give loss ln(C)."""
    loss, grad = softmax_cross_entropy(np.zeros((4, 3, 3)), np.full((3, 3), 2))
    assert loss == pytest.approx(math.log(4), abs=1e-9)
    assert grad.shape == (4, 3, 3)


def test_cross_entropy_saturated():
    """Test that a large target margin drives the loss to zero."""
    logits = np.zeros((2, 1, 1))
    logits[0] = 30.0
    loss, _ = softmax_cross_entropy(logits, np.zeros((1, 1), dtype=np.uint8))
    assert loss == pytest.approx(0.0, abs=1e-9)


def test_cross_entropy_scalar_case():
    """Test C=2, logits (1, 0), target 0 against ln(1 + e^-1)."""
    logits = np.array([1.0, 0.0]).reshape(2, 1, 1)
    loss, _ = softmax_cross_entropy(logits, np.zeros((1, 1), dtype=np.uint8))
    assert loss == pytest.approx(math.log(1 + math.exp(-1)), abs=1e-6)
    assert loss == pytest.approx(0.313262, abs=1e-6)


def test_cross_entropy_closed_form_gradient():
    """Test the uniform two-class single-pixel gradient (-0.5, 0.5)."""
    _, grad = softmax_cross_entropy(np.zeros((2, 1, 1)), np.zeros((1, 1), dtype=np.uint8))
    assert np.allclose(grad[:, 0, 0], [-0.5, 0.5])


def test_cross_entropy_shift_invariance(rng):
    """Test that adding a per-pixel constant to all logits leaves the loss unchanged."""
    logits = rng.standard_normal((4, 5, 5))
    target = rng.integers(0, 4, size=(5, 5))
    shift = rng.standard_normal((1, 5, 5)) * 5
    a, _ = softmax_cross_entropy(logits, target)
    b, _ = softmax_cross_entropy(logits + shift, target)
    assert a == pytest.approx(b, abs=1e-6)


def test_cross_entropy_batched_matches_single(rng):
    """Test that batched losses and gradients equal the per-sample ones."""
    logits = rng.standard_normal((3, 4, 4, 4))
    target = rng.integers(0, 4, size=(3, 4, 4))
    losses, grads = softmax_cross_entropy(logits, target)
    for i in range(3):
        loss, grad = softmax_cross_entropy(logits[i], target[i])
        assert losses[i] == pytest.approx(loss)
        assert np.allclose(grads[i], grad)


def test_cross_entropy_rejects_bad_targets():
    """Test rejection of out-of-range classes and non-finite logits."""
    with pytest.raises(ShapeError, match="out of range"):
        softmax_cross_entropy(np.zeros((2, 2, 2)), np.full((2, 2), 2))
    logits = np.zeros((2, 2, 2))
    logits[0, 0, 0] = np.nan
    with pytest.raises(NumericError):
        softmax_cross_entropy(logits, np.zeros((2, 2), dtype=np.uint8))


def test_cross_entropy_gradient_matches_finite_differences(rng):
    """Test the logit gradient against central differences."""
    logits = rng.standard_normal((3, 4, 4))
    target = rng.integers(0, 3, size=(4, 4))
    _, grad = softmax_cross_entropy(logits, target)
    numeric = numeric_grad(lambda: softmax_cross_entropy(logits, target)[0], logits)
    assert rel_error(grad, numeric) < 1e-6


def test_one_hot():
    """Test indicator encoding of a class raster."""
    encoded = one_hot(np.array([[0, 1], [3, 2]]), 4)
    assert encoded.shape == (4, 2, 2)
    assert encoded[3, 1, 0] == 1
    assert encoded.sum() == 4


def _tiny_net(tape: Tape, x: np.ndarray, params: dict) -> np.ndarray:
    """conv-relu-pool-conv-upsample-concat-conv: every op the segmenter uses."""
    def conv(name, v):
        weight = tape.param(f"{name}.w", params[f"{name}.w"])
        bias = tape.param(f"{name}.b", params[f"{name}.b"])
        return tape.conv2d(v, weight, bias)

    a = tape.relu(conv("c1", tape.constant(x)))
    b = tape.relu(conv("c2", tape.max_pool(a)))
    cat = tape.concat(a, tape.upsample(b))
    return tape.mark_output(conv("c3", cat)).value


def test_backward_matches_finite_differences():
    """Test every parameter gradient of a tiny network on 50 random instances."""
    for trial in range(50):
        rng = np.random.default_rng(trial)
        size = int(rng.choice([2, 4, 6, 8]))
        x = rng.standard_normal((2, size, size))
        params = {
            "c1.w": rng.standard_normal((3, 2, 3, 3)) * 0.5,
            "c1.b": rng.standard_normal(3) * 0.1,
            "c2.w": rng.standard_normal((2, 3, 3, 3)) * 0.5,
            "c2.b": rng.standard_normal(2) * 0.1,
            "c3.w": rng.standard_normal((2, 5, 1, 1)) * 0.5,
            "c3.b": rng.standard_normal(2) * 0.1,
        }
        seed = rng.standard_normal((2, size, size))

        tape = Tape()
        _tiny_net(tape, x, params)
        bundle = backward(tape, seed)

        def loss():
            return float(np.sum(seed * _tiny_net(Tape(), x, params)))

        for name, value in params.items():
            numeric = numeric_grad(loss, value)
            assert rel_error(bundle.parameter_grads[name], numeric) < 1e-3, (trial, name)


def test_backward_zero_seed():
    """Test that a zero seed produces all-zero gradients."""
    rng = np.random.default_rng(0)
    params = {
        "c1.w": rng.standard_normal((3, 2, 3, 3)),
        "c1.b": np.zeros(3),
        "c2.w": rng.standard_normal((2, 3, 3, 3)),
        "c2.b": np.zeros(2),
        "c3.w": rng.standard_normal((2, 5, 1, 1)),
        "c3.b": np.zeros(2),
    }
    tape = Tape()
    out = _tiny_net(tape, rng.standard_normal((2, 4, 4)), params)
    bundle = backward(tape, np.zeros_like(out))
    assert all(np.all(g == 0) for g in bundle.parameter_grads.values())


def test_backward_without_forward():
    """Test that backward on an empty tape is rejected."""
    with pytest.raises(GraphError):
        backward(Tape(), np.zeros((1, 2, 2)))


def test_backward_seed_shape_mismatch():
    """Test that a wrongly shaped seed is rejected."""
    tape = Tape()
    x = tape.constant(np.ones((1, 2, 2)))
    tape.mark_output(tape.relu(x))
    with pytest.raises(ShapeError):
        backward(tape, np.zeros((1, 4, 4)))
