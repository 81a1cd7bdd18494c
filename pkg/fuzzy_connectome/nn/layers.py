"""
Layers of the numpy network kernel.

Tensors are batched NHWC arrays (or N×features for dense layers). Every
layer caches what its backward pass needs during `forward` and returns the
input gradient from `backward`, accumulating parameter gradients in `grads`.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from enum import Enum
from typing import Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..errors import ShapeError

KERNEL = 3


class LayerKind(str, Enum):
    CONV2D = "Conv2D"
    MAXPOOL2X2 = "MaxPool2x2"
    UPSAMPLE2X = "UpsampleNearest2x"
    DENSE = "Dense"
    RELU = "ReLU"
    TANH = "Tanh"
    SOFTMAX = "Softmax"
    CENTER_CROP = "CenterCrop"


class LayerSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: LayerKind
    params: Dict[str, int] = Field(default_factory=dict)


class Layer(ABC):
    kind: LayerKind

    def __init__(self) -> None:
        self.params: Dict[str, np.ndarray] = {}
        self.grads: Dict[str, np.ndarray] = {}
        self.trainable = True

    @abstractmethod
    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @abstractmethod
    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def spec(self) -> LayerSpec:
        return LayerSpec(kind=self.kind)

    def output_shape(self, shape: tuple) -> tuple:
        """Per-sample output shape for a per-sample input shape."""
        return shape

    @property
    def n_params(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def zero_grad(self) -> None:
        for name, p in self.params.items():
            self.grads[name] = np.zeros_like(p)

    def kink_state(self) -> Optional[np.ndarray]:
        """Discrete branch taken in the last forward pass (None for smooth layers)."""
        return None


# ── Parametric layers ───────────────────────────────────────────────────────

class Conv2D(Layer):
    """3×3 cross-correlation, stride 1, zero same-padding."""

    kind = LayerKind.CONV2D

    def __init__(self, in_channels: int, out_channels: int, rng: Optional[np.random.Generator] = None):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        self.in_channels = in_channels
        self.out_channels = out_channels
        fan_in = KERNEL * KERNEL * in_channels
        self.params["W"] = rng.normal(0.0, np.sqrt(2.0 / fan_in), (KERNEL, KERNEL, in_channels, out_channels))
        self.params["b"] = np.zeros(out_channels)
        self.zero_grad()
        self._xp: Optional[np.ndarray] = None

    def spec(self) -> LayerSpec:
        return LayerSpec(kind=self.kind, params={"in_channels": self.in_channels, "out_channels": self.out_channels})

    def output_shape(self, shape: tuple) -> tuple:
        return (shape[0], shape[1], self.out_channels)

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 4 or x.shape[-1] != self.in_channels:
            raise ShapeError(f"Conv2D expects N×H×W×{self.in_channels}, got {x.shape}")
        n, h, w, _ = x.shape
        xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
        W = self.params["W"]
        out = np.zeros((n, h, w, self.out_channels)) + self.params["b"]
        for i in range(KERNEL):
            for j in range(KERNEL):
                out += xp[:, i:i + h, j:j + w, :] @ W[i, j]
        self._xp = xp
        return out

    def backward(self, grad: np.ndarray) -> np.ndarray:
        xp = self._xp
        n, h, w, _ = grad.shape
        W = self.params["W"]
        dW = np.empty_like(W)
        dxp = np.zeros_like(xp)
        for i in range(KERNEL):
            for j in range(KERNEL):
                dW[i, j] = np.tensordot(xp[:, i:i + h, j:j + w, :], grad, axes=([0, 1, 2], [0, 1, 2]))
                dxp[:, i:i + h, j:j + w, :] += grad @ W[i, j].T
        self.grads["W"] += dW
        self.grads["b"] += grad.sum(axis=(0, 1, 2))
        return dxp[:, 1:-1, 1:-1, :]


class Dense(Layer):
    """Affine map on the flattened per-sample input."""

    kind = LayerKind.DENSE

    def __init__(self, in_features: int, out_features: int, rng: Optional[np.random.Generator] = None):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        self.in_features = in_features
        self.out_features = out_features
        self.params["W"] = rng.normal(0.0, np.sqrt(2.0 / in_features), (in_features, out_features))
        self.params["b"] = np.zeros(out_features)
        self.zero_grad()
        self._x: Optional[np.ndarray] = None
        self._in_shape: tuple = ()

    def spec(self) -> LayerSpec:
        return LayerSpec(kind=self.kind, params={"in_features": self.in_features, "out_features": self.out_features})

    def output_shape(self, shape: tuple) -> tuple:
        return (self.out_features,)

    def forward(self, x: np.ndarray) -> np.ndarray:
        flat = x.reshape(x.shape[0], -1)
        if flat.shape[1] != self.in_features:
            raise ShapeError(f"Dense expects {self.in_features} inputs, got {flat.shape[1]}")
        self._x = flat
        self._in_shape = x.shape
        return flat @ self.params["W"] + self.params["b"]

    def backward(self, grad: np.ndarray) -> np.ndarray:
        self.grads["W"] += self._x.T @ grad
        self.grads["b"] += grad.sum(axis=0)
        return (grad @ self.params["W"].T).reshape(self._in_shape)


# ── Shape layers ────────────────────────────────────────────────────────────

class MaxPool2x2(Layer):
    """2×2 max pooling, stride 2, ceil mode (edge windows may cover one row/column)."""

    kind = LayerKind.MAXPOOL2X2

    def __init__(self) -> None:
        super().__init__()
        self._argmax: Optional[np.ndarray] = None
        self._in_shape: tuple = ()

    def output_shape(self, shape: tuple) -> tuple:
        return (-(-shape[0] // 2), -(-shape[1] // 2), shape[2])

    def forward(self, x: np.ndarray) -> np.ndarray:
        n, h, w, c = x.shape
        h2, w2 = -(-h // 2), -(-w // 2)
        xp = np.pad(x, ((0, 0), (0, 2 * h2 - h), (0, 2 * w2 - w), (0, 0)), constant_values=-np.inf)
        windows = xp.reshape(n, h2, 2, w2, 2, c).transpose(0, 1, 3, 5, 2, 4).reshape(n, h2, w2, c, 4)
        self._argmax = windows.argmax(axis=-1)
        self._in_shape = x.shape
        return np.take_along_axis(windows, self._argmax[..., None], axis=-1)[..., 0]

    def backward(self, grad: np.ndarray) -> np.ndarray:
        n, h, w, c = self._in_shape
        h2, w2 = grad.shape[1], grad.shape[2]
        routed = np.zeros((n, h2, w2, c, 4))
        np.put_along_axis(routed, self._argmax[..., None], grad[..., None], axis=-1)
        full = routed.reshape(n, h2, w2, c, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(n, 2 * h2, 2 * w2, c)
        return full[:, :h, :w, :]

    def kink_state(self) -> Optional[np.ndarray]:
        return None if self._argmax is None else self._argmax.copy()


class UpsampleNearest2x(Layer):
    kind = LayerKind.UPSAMPLE2X

    def output_shape(self, shape: tuple) -> tuple:
        return (2 * shape[0], 2 * shape[1], shape[2])

    def forward(self, x: np.ndarray) -> np.ndarray:
        return x.repeat(2, axis=1).repeat(2, axis=2)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        n, h2, w2, c = grad.shape
        return grad.reshape(n, h2 // 2, 2, w2 // 2, 2, c).sum(axis=(2, 4))


class CenterCrop(Layer):
    kind = LayerKind.CENTER_CROP

    def __init__(self, size: int) -> None:
        super().__init__()
        self.size = size
        self._in_shape: tuple = ()

    def spec(self) -> LayerSpec:
        return LayerSpec(kind=self.kind, params={"size": self.size})

    def output_shape(self, shape: tuple) -> tuple:
        return (self.size, self.size, shape[2])

    def _offsets(self, h: int, w: int) -> tuple:
        if h < self.size or w < self.size:
            raise ShapeError(f"cannot crop {h}×{w} to {self.size}×{self.size}")
        return (h - self.size) // 2, (w - self.size) // 2

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._in_shape = x.shape
        top, left = self._offsets(x.shape[1], x.shape[2])
        return x[:, top:top + self.size, left:left + self.size, :]

    def backward(self, grad: np.ndarray) -> np.ndarray:
        out = np.zeros(self._in_shape)
        top, left = self._offsets(self._in_shape[1], self._in_shape[2])
        out[:, top:top + self.size, left:left + self.size, :] = grad
        return out


# ── Activations ─────────────────────────────────────────────────────────────

class ReLU(Layer):
    kind = LayerKind.RELU

    def __init__(self) -> None:
        super().__init__()
        self._mask: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return grad * self._mask

    def kink_state(self) -> Optional[np.ndarray]:
        return None if self._mask is None else self._mask.copy()


class Tanh(Layer):
    kind = LayerKind.TANH

    def __init__(self) -> None:
        super().__init__()
        self._y: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._y = np.tanh(x)
        return self._y

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return grad * (1.0 - self._y ** 2)


class Softmax(Layer):
    """Softmax over the last axis."""

    kind = LayerKind.SOFTMAX

    def __init__(self) -> None:
        super().__init__()
        self._s: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        z = x - x.max(axis=-1, keepdims=True)
        e = np.exp(z)
        self._s = e / e.sum(axis=-1, keepdims=True)
        return self._s

    def backward(self, grad: np.ndarray) -> np.ndarray:
        s = self._s
        return s * (grad - (grad * s).sum(axis=-1, keepdims=True))


def build_layer(spec: LayerSpec, rng: Optional[np.random.Generator] = None) -> Layer:
    p = spec.params
    if spec.kind is LayerKind.CONV2D:
        return Conv2D(p["in_channels"], p["out_channels"], rng)
    if spec.kind is LayerKind.DENSE:
        return Dense(p["in_features"], p["out_features"], rng)
    if spec.kind is LayerKind.CENTER_CROP:
        return CenterCrop(p["size"])
    simple = {
        LayerKind.MAXPOOL2X2: MaxPool2x2,
        LayerKind.UPSAMPLE2X: UpsampleNearest2x,
        LayerKind.RELU: ReLU,
        LayerKind.TANH: Tanh,
        LayerKind.SOFTMAX: Softmax,
    }
    return simple[spec.kind]()
