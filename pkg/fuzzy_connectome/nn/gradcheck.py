"""
Central finite-difference gradient checks.

Coordinates whose ±eps perturbation flips a ReLU mask or a pooling argmax are
skipped: the loss is not differentiable across that kink and the difference
quotient is meaningless there.
"""

from __future__ import annotations

from typing import List, NamedTuple, Optional

import numpy as np

from .losses import LossFn
from .network import Sequential


class GradCheckResult(NamedTuple):
    max_rel_error: float
    checked: int
    skipped: int


def relative_error(analytic: float, numeric: float, floor: float = 1e-4) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def _same_states(a: List[Optional[np.ndarray]], b: List[Optional[np.ndarray]]) -> bool:
    return all(
        (sa is None and sb is None) or (sa is not None and sb is not None and np.array_equal(sa, sb))
        for sa, sb in zip(a, b)
    )


def check_gradients(
    network: Sequential,
    x: np.ndarray,
    y: np.ndarray,
    loss_fn: LossFn,
    eps: float = 1e-4,
    max_coords: Optional[int] = None,
    wrt_input: bool = False,
    seed: int = 0,
    floor: float = 1e-4,
) -> GradCheckResult:
    """
    Compare backprop gradients with (L(θ+ε) − L(θ−ε)) / 2ε for every parameter
    (and the input when `wrt_input`). `max_coords` samples that many
    coordinates per array instead of checking all of them.
    """
    rng = np.random.default_rng(seed)
    x = np.array(x, dtype=float)

    network.zero_grad()
    loss, grad = loss_fn(network.forward(x), y)
    dx = network.backward(grad)
    base_states = network.kink_states()

    targets = [(layer.params[name], layer.grads[name].copy()) for layer, name in network.parameters(False)]
    if wrt_input:
        targets.append((x, dx.copy()))

    def evaluate() -> tuple:
        value, _ = loss_fn(network.forward(x), y)
        return value, network.kink_states()

    worst, checked, skipped = 0.0, 0, 0
    for arr, analytic in targets:
        if max_coords is None or max_coords >= arr.size:
            coords = np.arange(arr.size)
        else:
            coords = rng.choice(arr.size, size=max_coords, replace=False)
        for flat in coords:
            idx = np.unravel_index(int(flat), arr.shape)
            orig = arr[idx]
            arr[idx] = orig + eps
            plus, s_plus = evaluate()
            arr[idx] = orig - eps
            minus, s_minus = evaluate()
            arr[idx] = orig
            if not (_same_states(s_plus, base_states) and _same_states(s_minus, base_states)):
                skipped += 1
                continue
            numeric = (plus - minus) / (2.0 * eps)
            worst = max(worst, relative_error(float(analytic[idx]), numeric, floor))
            checked += 1

    # restore the forward cache to the unperturbed point
    network.forward(x)
    return GradCheckResult(worst, checked, skipped)
