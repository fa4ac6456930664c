"""Forward and reverse-mode kernels for the segmenter.

Rasters are laid out (N, C, H, W). Every forward function returns its output
together with a cache consumed by the matching ``*_backward`` function.
"""

from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import NumericError, ShapeError

Tensor = np.ndarray


def _as_batch(x: Tensor, name: str) -> Tuple[Tensor, bool]:
    """Promote (C, H, W) to (1, C, H, W); report whether promotion happened."""
    if x.ndim == 3:
        return x[None], True
    if x.ndim == 4:
        return x, False
    raise ShapeError(f"{name} must be (C,H,W) or (N,C,H,W), got shape {x.shape}")


def conv2d(x: Tensor, kernels: Tensor, bias: Tensor) -> Tuple[Tensor, tuple]:
    """Same-padded, stride-1 2-D convolution (cross-correlation).

    ``kernels`` is (C_out, C_in, k, k) with odd k; ``bias`` is (C_out,).
    """
    xb, squeezed = _as_batch(x, "conv2d input")
    if kernels.ndim != 4 or kernels.shape[2] != kernels.shape[3]:
        raise ShapeError(f"kernels must be (C_out, C_in, k, k), got {kernels.shape}")
    c_out, c_in, k, _ = kernels.shape
    if k % 2 == 0:
        raise ShapeError(f"kernel spatial extent must be odd, got {k}")
    if xb.shape[1] != c_in:
        raise ShapeError(
            f"conv2d channel mismatch: input has {xb.shape[1]} channels, kernels expect {c_in}"
        )
    if bias.shape != (c_out,):
        raise ShapeError(f"bias must have shape ({c_out},), got {bias.shape}")

    pad = k // 2
    xp = np.pad(xb, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    windows = sliding_window_view(xp, (k, k), axis=(2, 3))  # (N, C_in, H, W, k, k)
    y = np.einsum("nchwij,ocij->nohw", windows, kernels, optimize=True)
    y += bias[None, :, None, None]
    y = y.astype(xb.dtype, copy=False)
    return (y[0] if squeezed else y), (windows, kernels, pad, squeezed)


def conv2d_backward(dy: Tensor, cache: tuple) -> Tuple[Tensor, Tensor, Tensor]:
    """Gradients of conv2d with respect to input, kernels and bias."""
    windows, kernels, pad, squeezed = cache
    dyb = dy[None] if squeezed else dy
    k = kernels.shape[2]

    d_kernels = np.einsum("nohw,nchwij->ocij", dyb, windows, optimize=True)
    d_bias = dyb.sum(axis=(0, 2, 3))

    dyp = np.pad(dyb, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    dy_windows = sliding_window_view(dyp, (k, k), axis=(2, 3))
    flipped = kernels[:, :, ::-1, ::-1]
    dx = np.einsum("nohwij,ocij->nchw", dy_windows, flipped, optimize=True)
    return (dx[0] if squeezed else dx), d_kernels, d_bias


def relu(x: Tensor) -> Tuple[Tensor, Tensor]:
    positive = x > 0
    return np.where(positive, x, 0).astype(x.dtype, copy=False), positive


def relu_backward(dy: Tensor, positive: Tensor) -> Tensor:
    return dy * positive


def max_pool2x2(x: Tensor) -> Tuple[Tensor, tuple]:
    """2x2 max-pooling with stride 2. Odd spatial extents are rejected."""
    xb, squeezed = _as_batch(x, "max_pool2x2 input")
    n, c, h, w = xb.shape
    if h % 2 or w % 2:
        raise ShapeError(f"max_pool2x2 requires even spatial extents, got {h}x{w}")
    blocks = xb.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    blocks = blocks.reshape(n, c, h // 2, w // 2, 4)
    winner = blocks.argmax(axis=-1)
    y = np.take_along_axis(blocks, winner[..., None], axis=-1)[..., 0]
    return (y[0] if squeezed else y), (winner, xb.shape, squeezed)


def max_pool2x2_backward(dy: Tensor, cache: tuple) -> Tensor:
    winner, shape, squeezed = cache
    dyb = dy[None] if squeezed else dy
    n, c, h, w = shape
    blocks = np.zeros((n, c, h // 2, w // 2, 4), dtype=dyb.dtype)
    np.put_along_axis(blocks, winner[..., None], dyb[..., None], axis=-1)
    dx = blocks.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(shape)
    return dx[0] if squeezed else dx


def upsample2x(x: Tensor) -> Tensor:
    """Nearest-neighbor upsampling by a factor of two on both spatial axes."""
    return np.repeat(np.repeat(x, 2, axis=-2), 2, axis=-1)


def upsample2x_backward(dy: Tensor) -> Tensor:
    *lead, h, w = dy.shape
    return dy.reshape(*lead, h // 2, 2, w // 2, 2).sum(axis=(-3, -1))


def avg_pool2x2(x: Tensor) -> Tensor:
    """2x2 average pooling over the trailing two axes."""
    *lead, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"avg_pool2x2 requires even spatial extents, got {h}x{w}")
    return x.reshape(*lead, h // 2, 2, w // 2, 2).mean(axis=(-3, -1))


def softmax(logits: Tensor, axis: int = -3) -> Tensor:
    """Per-pixel softmax over the class axis."""
    shifted = logits - logits.max(axis=axis, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=axis, keepdims=True)


def softmax_cross_entropy(logits: Tensor, target: np.ndarray):
    """Mean per-pixel cross-entropy and its gradient with respect to the logits.

    For a single sample (C, H, W) with a (H, W) target this returns a float loss
    and a (C, H, W) gradient; batched inputs return per-sample losses (N,) and
    per-sample gradients (N, C, H, W). Each sample's gradient is the derivative of
    that sample's own loss: (softmax - one_hot) / num_pixels.
    """
    lb, squeezed = _as_batch(logits, "logits")
    tb = target[None] if squeezed else target
    n, c, h, w = lb.shape
    if tb.shape != (n, h, w):
        raise ShapeError(f"target shape {target.shape} does not match logits {logits.shape}")
    if tb.size and (tb.min() < 0 or tb.max() >= c):
        raise ShapeError(f"target class index out of range [0, {c})")
    if not np.all(np.isfinite(lb)):
        raise NumericError("logits contain non-finite values")

    z = lb.astype(np.float64)
    shifted = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    picked = np.take_along_axis(log_probs, tb[:, None].astype(np.intp), axis=1)[:, 0]
    losses = -picked.reshape(n, -1).mean(axis=1)

    probs = np.exp(log_probs)
    one_hot = np.zeros_like(probs)
    np.put_along_axis(one_hot, tb[:, None].astype(np.intp), 1.0, axis=1)
    grads = ((probs - one_hot) / (h * w)).astype(lb.dtype, copy=False)

    if squeezed:
        return float(losses[0]), grads[0]
    return losses, grads


def one_hot(mask: np.ndarray, num_classes: int) -> Tensor:
    """(…, H, W) class raster to (…, C, H, W) indicator tensor."""
    return (np.arange(num_classes)[:, None, None] == mask[..., None, :, :]).astype(np.float32)
