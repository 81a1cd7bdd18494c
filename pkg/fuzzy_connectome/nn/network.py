from __future__ import annotations

import copy
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from ..errors import DivergenceError
from .layers import Layer, LayerSpec

ParamRef = Tuple[Layer, str]


class Sequential:
    """Ordered layer stack; forward caches activations for one backward pass."""

    def __init__(self, layers: Iterable[Layer]):
        self.layers: List[Layer] = list(layers)

    def forward(self, x: np.ndarray) -> np.ndarray:
        out = np.asarray(x, dtype=float)
        for layer in self.layers:
            out = layer.forward(out)
        return out

    __call__ = forward

    def backward(self, grad: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def predict(self, x: np.ndarray, batch_size: int = 32) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        chunks = [self.forward(x[i:i + batch_size]) for i in range(0, x.shape[0], batch_size)]
        return np.concatenate(chunks, axis=0)

    def zero_grad(self) -> None:
        for layer in self.layers:
            layer.zero_grad()

    def parameters(self, trainable_only: bool = True) -> List[ParamRef]:
        return [
            (layer, name)
            for layer in self.layers
            if layer.trainable or not trainable_only
            for name in layer.params
        ]

    @property
    def n_params(self) -> int:
        return sum(layer.n_params for layer in self.layers)

    def specs(self) -> List[LayerSpec]:
        return [layer.spec() for layer in self.layers]

    def output_shapes(self, input_shape: tuple) -> List[tuple]:
        shapes = []
        shape = tuple(input_shape)
        for layer in self.layers:
            shape = layer.output_shape(shape)
            shapes.append(shape)
        return shapes

    def kink_states(self) -> List[Optional[np.ndarray]]:
        return [layer.kink_state() for layer in self.layers]

    def set_trainable(self, flag: bool) -> None:
        for layer in self.layers:
            layer.trainable = flag

    def clone(self) -> "Sequential":
        return copy.deepcopy(self)


def backward(
    network: Sequential,
    loss: float,
    loss_grad: np.ndarray,
    step: Optional[int] = None,
) -> Dict[Tuple[int, str], np.ndarray]:
    """
    Reverse-mode pass from dLoss/dOutput. Returns gradients keyed by
    (layer index, parameter name); raises DivergenceError on a non-finite
    loss or gradient.
    """
    if not np.isfinite(loss):
        raise DivergenceError(f"non-finite loss {loss}", step)
    network.zero_grad()
    network.backward(loss_grad)
    grads: Dict[Tuple[int, str], np.ndarray] = {}
    for i, layer in enumerate(network.layers):
        for name, g in layer.grads.items():
            if not np.all(np.isfinite(g)):
                raise DivergenceError(f"non-finite gradient in layer {i} ({layer.kind.value}.{name})", step)
            grads[(i, name)] = g
    return grads
