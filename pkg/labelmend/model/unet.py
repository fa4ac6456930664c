"""Compact U-Net encoder-decoder on top of the numerics tape."""

from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from ..config import ArchitectureDescriptor
from ..errors import ShapeError
from ..numerics import Tape, Var, softmax

Tensor = np.ndarray


@dataclass
class ModelParams:
    """Ordered named weight/bias tensors plus the descriptor they were built from."""
    tensors: Dict[str, Tensor]
    descriptor: ArchitectureDescriptor

    def __iter__(self) -> Iterator[Tuple[str, Tensor]]:
        return iter(self.tensors.items())

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def copy(self) -> "ModelParams":
        return ModelParams({k: v.copy() for k, v in self.tensors.items()}, self.descriptor)

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {k: v.shape for k, v in self.tensors.items()}

    def equals(self, other: "ModelParams") -> bool:
        """Bitwise equality of every tensor."""
        if list(self.tensors) != list(other.tensors):
            return False
        return all(
            a.dtype == b.dtype and np.array_equal(a, b)
            for a, b in zip(self.tensors.values(), other.tensors.values())
        )


def level_channels(descriptor: ArchitectureDescriptor) -> List[int]:
    """Channels per encoder level followed by the bottleneck width."""
    return [descriptor.base_channels * 2**level for level in range(descriptor.levels + 1)]


def layer_shapes(descriptor: ArchitectureDescriptor) -> Dict[str, Tuple[int, ...]]:
    """Kernel shapes of every conv layer, in execution order."""
    chans = level_channels(descriptor)
    shapes: Dict[str, Tuple[int, ...]] = {}
    prev = descriptor.in_channels
    for level in range(descriptor.levels):
        shapes[f"enc{level}.conv1"] = (chans[level], prev, 3, 3)
        shapes[f"enc{level}.conv2"] = (chans[level], chans[level], 3, 3)
        prev = chans[level]
    bottom = chans[descriptor.levels]
    shapes["bottleneck.conv1"] = (bottom, prev, 3, 3)
    shapes["bottleneck.conv2"] = (bottom, bottom, 3, 3)
    for level in reversed(range(descriptor.levels)):
        shapes[f"up{level}.conv"] = (chans[level], chans[level + 1], 3, 3)
        shapes[f"dec{level}.conv1"] = (chans[level], 2 * chans[level], 3, 3)
        shapes[f"dec{level}.conv2"] = (chans[level], chans[level], 3, 3)
    shapes["head"] = (descriptor.num_classes, chans[0], 1, 1)
    return shapes


def param_shapes(descriptor: ArchitectureDescriptor) -> Dict[str, Tuple[int, ...]]:
    shapes: Dict[str, Tuple[int, ...]] = {}
    for layer, kshape in layer_shapes(descriptor).items():
        shapes[f"{layer}.weight"] = kshape
        shapes[f"{layer}.bias"] = (kshape[0],)
    return shapes


def init_model(descriptor: ArchitectureDescriptor, seed: int) -> ModelParams:
    """He-normal weights (variance 2/fan_in), zero biases; deterministic per seed."""
    rng = np.random.default_rng(seed)
    tensors: Dict[str, Tensor] = {}
    for layer, (c_out, c_in, kh, kw) in layer_shapes(descriptor).items():
        fan_in = c_in * kh * kw
        std = np.sqrt(2.0 / fan_in)
        tensors[f"{layer}.weight"] = (rng.standard_normal((c_out, c_in, kh, kw)) * std).astype(
            np.float32
        )
        tensors[f"{layer}.bias"] = np.zeros(c_out, dtype=np.float32)
    return ModelParams(tensors, descriptor)


def check_params(params: ModelParams) -> None:
    expected = param_shapes(params.descriptor)
    actual = params.shapes()
    if list(expected) != list(actual) or any(expected[k] != actual[k] for k in expected):
        raise ShapeError("parameter shapes are inconsistent with the architecture descriptor")
    for name, value in params:
        if not np.all(np.isfinite(value)):
            raise ShapeError(f"parameter {name} contains non-finite values")


def _conv(tape: Tape, params: ModelParams, layer: str, x: Var, activate: bool = True) -> Var:
    y = tape.conv2d(
        x,
        tape.param(f"{layer}.weight", params[f"{layer}.weight"]),
        tape.param(f"{layer}.bias", params[f"{layer}.bias"]),
    )
    return tape.relu(y) if activate else y


def forward(params: ModelParams, image: Tensor, tape: Optional[Tape] = None) -> Tensor:
    """Logits for one image (1, H, W) -> (C, H, W) or a batch (N, 1, H, W) -> (N, C, H, W).

    When a tape is passed the pass is recorded on it for ``numerics.backward``.
    """
    descriptor = params.descriptor
    if image.ndim not in (3, 4):
        raise ShapeError(f"image must be (1,H,W) or (N,1,H,W), got {image.shape}")
    h, w = image.shape[-2:]
    factor = 2**descriptor.levels
    if h % factor or w % factor:
        raise ShapeError(
            f"spatial extents {h}x{w} must be divisible by 2^levels = {factor}"
        )

    tape = tape if tape is not None else Tape()
    x = tape.constant(image.astype(np.float32, copy=False))

    skips: List[Var] = []
    for level in range(descriptor.levels):
        x = _conv(tape, params, f"enc{level}.conv1", x)
        x = _conv(tape, params, f"enc{level}.conv2", x)
        skips.append(x)
        x = tape.max_pool(x)

    x = _conv(tape, params, "bottleneck.conv1", x)
    x = _conv(tape, params, "bottleneck.conv2", x)

    for level in reversed(range(descriptor.levels)):
        x = _conv(tape, params, f"up{level}.conv", tape.upsample(x))
        x = tape.concat(skips[level], x)
        x = _conv(tape, params, f"dec{level}.conv1", x)
        x = _conv(tape, params, f"dec{level}.conv2", x)

    logits = _conv(tape, params, "head", x, activate=False)
    return tape.mark_output(logits).value


def predict_proba(params: ModelParams, images: Tensor) -> Tensor:
    """Softmax class probabilities, same batching rules as ``forward``."""
    return softmax(forward(params, images).astype(np.float64)).astype(np.float32)


def predict_mask(params: ModelParams, images: Tensor) -> np.ndarray:
    """Hard per-pixel argmax predictions."""
    logits = forward(params, images)
    return logits.argmax(axis=-3).astype(np.uint8)
