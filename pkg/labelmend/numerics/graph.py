"""Tape recording the segmenter's forward pass for reverse-mode gradients."""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..errors import GraphError, ShapeError
from . import ops

Tensor = np.ndarray


@dataclass
class GradientBundle:
    """Per-parameter gradients plus the logit gradient that seeded them."""
    parameter_grads: Dict[str, Tensor]
    logit_grads: Tensor


@dataclass(eq=False)
class Var:
    """A value on the tape."""
    value: Tensor
    index: int
    name: Optional[str] = None


@dataclass
class _Node:
    inputs: Tuple[Var, ...]
    output: Var
    backward: Callable[[Tensor], Tuple[Tensor, ...]]


@dataclass
class Tape:
    """Ordered record of one forward pass over the fixed op set."""
    _vars: List[Var] = field(default_factory=list)
    _nodes: List[_Node] = field(default_factory=list)
    _params: Dict[str, Var] = field(default_factory=dict)
    output: Optional[Var] = None

    def _new(self, value: Tensor, name: Optional[str] = None) -> Var:
        var = Var(value=value, index=len(self._vars), name=name)
        self._vars.append(var)
        return var

    def constant(self, value: Tensor) -> Var:
        return self._new(value)

    def param(self, name: str, value: Tensor) -> Var:
        if name not in self._params:
            self._params[name] = self._new(value, name)
        return self._params[name]

    def conv2d(self, x: Var, kernels: Var, bias: Var) -> Var:
        y, cache = ops.conv2d(x.value, kernels.value, bias.value)
        out = self._new(y)
        self._nodes.append(_Node((x, kernels, bias), out, lambda g: ops.conv2d_backward(g, cache)))
        return out

    def relu(self, x: Var) -> Var:
        y, positive = ops.relu(x.value)
        out = self._new(y)
        self._nodes.append(_Node((x,), out, lambda g: (ops.relu_backward(g, positive),)))
        return out

    def max_pool(self, x: Var) -> Var:
        y, cache = ops.max_pool2x2(x.value)
        out = self._new(y)
        self._nodes.append(_Node((x,), out, lambda g: (ops.max_pool2x2_backward(g, cache),)))
        return out

    def upsample(self, x: Var) -> Var:
        out = self._new(ops.upsample2x(x.value))
        self._nodes.append(_Node((x,), out, lambda g: (ops.upsample2x_backward(g),)))
        return out

    def concat(self, a: Var, b: Var) -> Var:
        """Concatenate along the channel axis."""
        axis = a.value.ndim - 3
        split = a.value.shape[axis]
        out = self._new(np.concatenate([a.value, b.value], axis=axis))

        def backward(g: Tensor) -> Tuple[Tensor, Tensor]:
            return np.split(g, [split], axis=axis)  # type: ignore[return-value]

        self._nodes.append(_Node((a, b), out, backward))
        return out

    def mark_output(self, var: Var) -> Var:
        self.output = var
        return var

    @property
    def param_names(self) -> List[str]:
        return list(self._params)


def backward(tape: Tape, loss_grad: Tensor) -> GradientBundle:
    """Propagate ``loss_grad`` (dL/dlogits) back through ``tape``.

    Parameters that the seed does not reach receive zero gradients.
    """
    if tape.output is None or not tape._nodes:
        raise GraphError("backward called before a forward pass was recorded")
    if loss_grad.shape != tape.output.value.shape:
        raise ShapeError(
            f"loss gradient shape {loss_grad.shape} does not match output {tape.output.value.shape}"
        )

    grads: Dict[int, Tensor] = {tape.output.index: loss_grad}
    for node in reversed(tape._nodes):
        upstream = grads.pop(node.output.index, None)
        if upstream is None:
            continue
        for var, grad in zip(node.inputs, node.backward(upstream)):
            if var.index in grads:
                grads[var.index] = grads[var.index] + grad
            else:
                grads[var.index] = grad

    parameter_grads = {
        name: grads.get(var.index, np.zeros_like(var.value)).astype(var.value.dtype, copy=False)
        for name, var in tape._params.items()
    }
    return GradientBundle(parameter_grads=parameter_grads, logit_grads=loss_grad)
