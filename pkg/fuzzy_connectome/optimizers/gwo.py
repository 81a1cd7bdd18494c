"""
Grey wolf optimizer.

Each iteration every wolf is pulled towards the three best positions found so
far (alpha, beta, delta): for leader L, D = |C·X_L − X| and X_L' = X_L − A·D
with A = a(2r₁ − 1), C = 2r₂, r uniform in [0, 1] per wolf and coordinate.
The new position is the mean of the three pulls, clipped to the box. The
scalar a falls linearly from 2 to 0: a = 2(1 − t/tMax) for t = 1..tMax.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .base import BaseOptimizer, MetaheuristicKind, ObjectiveSpec, OptimizationResult, draw_uniform

logger = logging.getLogger(__name__)

N_LEADERS = 3


def gwo_coefficient(t: int, t_max: int) -> float:
    return 2.0 * (1.0 - t / t_max)


@dataclass
class GwoState:
    wolves: np.ndarray
    scores: np.ndarray
    leaders: np.ndarray  # alpha, beta, delta rows
    leader_scores: np.ndarray
    t: int
    t_max: int

    @property
    def alpha(self) -> np.ndarray:
        return self.leaders[0]

    @property
    def best_score(self) -> float:
        return float(self.leader_scores[0])


def _rank_leaders(positions: np.ndarray, scores: np.ndarray) -> tuple:
    order = np.argsort(scores, kind="stable")
    pick = [order[min(k, order.size - 1)] for k in range(N_LEADERS)]
    return positions[pick].copy(), scores[pick].copy()


def init_state(wolves: np.ndarray, objective: ObjectiveSpec, t_max: int, workers: int = 1) -> GwoState:
    scores = objective.evaluate_all(wolves, workers)
    leaders, leader_scores = _rank_leaders(wolves, scores)
    return GwoState(wolves, scores, leaders, leader_scores, 0, t_max)


def gwo_step(
    state: GwoState,
    objective: ObjectiveSpec,
    streams: Sequence[np.random.Generator],
    a: Optional[float] = None,
    workers: int = 1,
) -> GwoState:
    """Advance one iteration; wolf i draws from `streams[i]`. `a` overrides the linear schedule."""
    t = state.t + 1
    if a is None:
        a = gwo_coefficient(t, state.t_max)
    x = state.wolves
    pulls = np.zeros_like(x)
    r = draw_uniform(streams, (N_LEADERS, 2, x.shape[1]))
    for k, leader in enumerate(state.leaders):
        r1, r2 = r[:, k, 0], r[:, k, 1]
        A = a * (2.0 * r1 - 1.0)
        C = 2.0 * r2
        D = np.abs(C * leader - x)
        pulls += leader - A * D
    wolves = objective.clip(pulls / N_LEADERS)
    scores = objective.evaluate_all(wolves, workers)

    leaders, leader_scores = _rank_leaders(
        np.vstack([state.leaders, wolves]),
        np.concatenate([state.leader_scores, scores]),
    )
    return GwoState(wolves, scores, leaders, leader_scores, t, state.t_max)


class GreyWolfOptimizer(BaseOptimizer):
    kind = MetaheuristicKind.GWO

    def minimize(self, objective: ObjectiveSpec, seeds: Optional[np.ndarray] = None) -> OptimizationResult:
        streams = self._streams()
        workers = self.spec.workers
        state = init_state(self._initial_population(objective, streams, seeds), objective, self.spec.max_iter, workers)
        history = [state.best_score]
        for _ in range(self.spec.max_iter):
            state = gwo_step(state, objective, streams, workers=workers)
            history.append(state.best_score)
        logger.debug("GWO: best %.6g after %d iterations", state.best_score, self.spec.max_iter)
        return OptimizationResult(state.alpha.copy(), state.best_score, history, self.kind)


def gwo_minimize(objective: ObjectiveSpec, spec=None, seeds: Optional[np.ndarray] = None) -> OptimizationResult:
    return GreyWolfOptimizer(spec).minimize(objective, seeds)
