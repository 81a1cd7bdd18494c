"""Error measures for regression objectives plus standard benchmark functions."""

from __future__ import annotations

from typing import Callable, Dict, NamedTuple, Optional

import numpy as np

from .base import ObjectiveSpec


def _pair(targets, outputs) -> tuple:
    t = np.asarray(targets, dtype=float).ravel()
    y = np.asarray(outputs, dtype=float).ravel()
    if t.size != y.size:
        raise ValueError(f"length mismatch: {t.size} targets vs {y.size} outputs")
    if t.size == 0:
        raise ValueError("need at least one target")
    return t, y


def mse(targets, outputs) -> float:
    """Mean of squared errors e_i = t_i − y_i."""
    t, y = _pair(targets, outputs)
    return float(np.mean((t - y) ** 2))


def rmse(targets, outputs) -> float:
    return float(np.sqrt(mse(targets, outputs)))


# ── Benchmarks ──────────────────────────────────────────────────────────────

def sphere(theta: np.ndarray) -> float:
    return float(np.sum(np.square(theta)))


def rastrigin(theta: np.ndarray) -> float:
    theta = np.asarray(theta, dtype=float)
    return float(10.0 * theta.size + np.sum(theta ** 2 - 10.0 * np.cos(2.0 * np.pi * theta)))


def rosenbrock(theta: np.ndarray) -> float:
    theta = np.asarray(theta, dtype=float)
    return float(np.sum(100.0 * (theta[1:] - theta[:-1] ** 2) ** 2 + (1.0 - theta[:-1]) ** 2))


def ackley(theta: np.ndarray) -> float:
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    return float(
        -20.0 * np.exp(-0.2 * np.sqrt(np.sum(theta ** 2) / n))
        - np.exp(np.sum(np.cos(2.0 * np.pi * theta)) / n)
        + 20.0
        + np.e
    )


class Benchmark(NamedTuple):
    fn: Callable[[np.ndarray], float]
    bound: float


BENCHMARKS: Dict[str, Benchmark] = {
    "sphere": Benchmark(sphere, 10.0),
    "rastrigin": Benchmark(rastrigin, 5.12),
    "rosenbrock": Benchmark(rosenbrock, 5.0),
    "ackley": Benchmark(ackley, 32.768),
}


def benchmark_objective(name: str, dimension: int = 30, bound: Optional[float] = None) -> ObjectiveSpec:
    """Symmetric box [−bound, bound]^dimension around a named benchmark (optimum 0)."""
    key = name.lower()
    if key not in BENCHMARKS:
        raise ValueError(f"unknown benchmark {name!r}; choose from {', '.join(sorted(BENCHMARKS))}")
    if dimension < 1:
        raise ValueError("dimension must be at least 1")
    bench = BENCHMARKS[key]
    b = bench.bound if bound is None else bound
    return ObjectiveSpec(bench.fn, np.full(dimension, -b), np.full(dimension, b))
