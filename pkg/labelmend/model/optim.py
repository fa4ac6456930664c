"""Adam optimizer with bias correction."""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from ..config import TrainConfig
from ..errors import NumericError, ShapeError
from .unet import ModelParams


@dataclass
class AdamState:
    """First/second moment estimates and the step counter."""
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "AdamState":
        return cls(
            step=0,
            m={k: np.zeros(t.shape, dtype=np.float64) for k, t in params},
            v={k: np.zeros(t.shape, dtype=np.float64) for k, t in params},
        )


def adam_step(
    params: ModelParams,
    grads: Dict[str, np.ndarray],
    state: AdamState,
    config: TrainConfig,
    context: Optional[str] = None,
) -> Tuple[ModelParams, AdamState]:
    """One Adam update; returns fresh params and state, inputs are not mutated.

    ``context`` names the samples behind the gradients for diagnostics.
    """
    if set(grads) != set(params.tensors):
        raise ShapeError("gradient names do not match parameter names")
    for name, grad in grads.items():
        if grad.shape != params[name].shape:
            raise ShapeError(
                f"gradient for {name} has shape {grad.shape}, expected {params[name].shape}"
            )
        if not np.all(np.isfinite(grad)):
            where = f" (samples: {context})" if context else ""
            raise NumericError(f"non-finite gradient for {name} at step {state.step + 1}{where}")

    if not state.m:
        state = AdamState.zeros_like(params)

    step = state.step + 1
    b1, b2 = config.adam_beta1, config.adam_beta2
    correction1 = 1.0 - b1**step
    correction2 = 1.0 - b2**step

    new_tensors: Dict[str, np.ndarray] = {}
    new_m: Dict[str, np.ndarray] = {}
    new_v: Dict[str, np.ndarray] = {}
    for name, value in params:
        g = grads[name].astype(np.float64)
        m = b1 * state.m[name] + (1.0 - b1) * g
        v = b2 * state.v[name] + (1.0 - b2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        update = config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_eps)
        new_tensors[name] = (value.astype(np.float64) - update).astype(value.dtype)
        new_m[name] = m
        new_v[name] = v

    return ModelParams(new_tensors, params.descriptor), AdamState(step=step, m=new_m, v=new_v)
