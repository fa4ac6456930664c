"""Segmenter: U-Net parameters, forward pass, optimizer and checkpoints."""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .optim import AdamState, adam_step
from .unet import (
    ModelParams,
    check_params,
    forward,
    init_model,
    layer_shapes,
    param_shapes,
    predict_mask,
    predict_proba,
)

__all__ = [
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "AdamState",
    "adam_step",
    "ModelParams",
    "check_params",
    "forward",
    "init_model",
    "layer_shapes",
    "param_shapes",
    "predict_mask",
    "predict_proba",
]
