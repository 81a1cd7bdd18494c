"""Scalar losses returning (value, dLoss/dPrediction)."""

from __future__ import annotations

from typing import Callable, Tuple

import numpy as np

LossFn = Callable[[np.ndarray, np.ndarray], Tuple[float, np.ndarray]]

_PROB_FLOOR = 1e-300


def mse_loss(pred: np.ndarray, target: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean over every element."""
    diff = pred - target
    return float(np.mean(diff ** 2)), 2.0 * diff / diff.size


def cross_entropy_loss(probs: np.ndarray, onehot: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean over the batch of −Σ t·log p; expects probabilities, not logits."""
    n = probs.shape[0]
    p = np.maximum(probs, _PROB_FLOOR)
    return float(-(onehot * np.log(p)).sum() / n), -onehot / (p * n)


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=int)
    out = np.zeros((labels.size, n_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out
