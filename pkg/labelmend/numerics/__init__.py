"""Dense tensor kernels and the reverse-mode tape."""

from .graph import GradientBundle, Tape, Var, backward
from .ops import (
    avg_pool2x2,
    conv2d,
    conv2d_backward,
    max_pool2x2,
    max_pool2x2_backward,
    one_hot,
    relu,
    relu_backward,
    softmax,
    softmax_cross_entropy,
    upsample2x,
    upsample2x_backward,
)

__all__ = [
    "GradientBundle",
    "Tape",
    "Var",
    "backward",
    "avg_pool2x2",
    "conv2d",
    "conv2d_backward",
    "max_pool2x2",
    "max_pool2x2_backward",
    "one_hot",
    "relu",
    "relu_backward",
    "softmax",
    "softmax_cross_entropy",
    "upsample2x",
    "upsample2x_backward",
]
