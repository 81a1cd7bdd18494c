from __future__ import annotations

import logging
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, NonNegativeFloat, NonNegativeInt, PositiveInt

from .losses import LossFn
from .network import ParamRef, Sequential, backward

logger = logging.getLogger(__name__)


class OptimizerKind(str, Enum):
    SGD = "sgd"
    ADAM = "adam"


class TrainConfig(BaseModel):
    """Gradient training settings; lr 0 is allowed (parameters stay put)."""

    model_config = ConfigDict(extra="forbid")

    optimizer: OptimizerKind = OptimizerKind.ADAM
    learning_rate: NonNegativeFloat = 1e-3
    epochs: PositiveInt = 50
    batch_size: PositiveInt = 8
    seed: NonNegativeInt = 0


# ── Update rules ────────────────────────────────────────────────────────────

class SGD:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: List[ParamRef]) -> None:
        for layer, name in params:
            layer.params[name] -= self.lr * layer.grads[name]


class Adam:
    """Adam with bias-corrected first and second moment estimates."""

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: Dict[Tuple[int, str], np.ndarray] = {}
        self._v: Dict[Tuple[int, str], np.ndarray] = {}

    def step(self, params: List[ParamRef]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for layer, name in params:
            key = (id(layer), name)
            g = layer.grads[name]
            m = self._m.get(key)
            if m is None:
                m = self._m[key] = np.zeros_like(g)
                self._v[key] = np.zeros_like(g)
            v = self._v[key]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            layer.params[name] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def make_optimizer(config: TrainConfig):
    if config.optimizer is OptimizerKind.SGD:
        return SGD(config.learning_rate)
    return Adam(config.learning_rate)


# ── Loop ────────────────────────────────────────────────────────────────────

def train_step(
    network: Sequential,
    batch_x: np.ndarray,
    batch_y: np.ndarray,
    loss_fn: LossFn,
    optimizer,
    step: Optional[int] = None,
) -> float:
    """One forward/backward/update on a nonempty batch; returns the pre-update loss."""
    if batch_x.shape[0] == 0:
        raise ValueError("empty batch")
    pred = network.forward(batch_x)
    loss, grad = loss_fn(pred, batch_y)
    backward(network, loss, grad, step)
    optimizer.step(network.parameters())
    return loss


def fit(
    network: Sequential,
    x: np.ndarray,
    y: np.ndarray,
    loss_fn: LossFn,
    config: TrainConfig,
    on_epoch: Optional[Callable[[int, float], Optional[bool]]] = None,
) -> List[float]:
    """
    Mini-batch training with a seeded shuffle per epoch. Returns the
    per-epoch loss (batch losses averaged, weighted by batch size).
    `on_epoch` runs after every epoch; returning True ends training there.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[0]
    if n == 0:
        raise ValueError("no training samples")
    rng = np.random.default_rng(config.seed)
    optimizer = make_optimizer(config)
    history: List[float] = []
    step = 0
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            total += train_step(network, x[idx], y[idx], loss_fn, optimizer, step) * idx.size
            step += 1
        history.append(total / n)
        logger.debug("epoch %d/%d loss=%.6g", epoch + 1, config.epochs, history[-1])
        if on_epoch is not None and on_epoch(epoch, history[-1]):
            logger.debug("training stopped after epoch %d", epoch + 1)
            break
    return history
