from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from .base import BaseOptimizer, MetaheuristicKind, ObjectiveSpec, OptimizationResult, draw_uniform

logger = logging.getLogger(__name__)


class ParticleSwarmOptimizer(BaseOptimizer):
    """
    Global-best PSO: v ← w·v + c₁r₁(pbest − x) + c₂r₂(gbest − x), x ← x + v.
    Velocities start at zero and are clamped per coordinate; positions are
    clipped to the box.
    """

    kind = MetaheuristicKind.PSO

    def minimize(self, objective: ObjectiveSpec, seeds: Optional[np.ndarray] = None) -> OptimizationResult:
        spec = self.spec
        streams = self._streams()
        x = self._initial_population(objective, streams, seeds)
        v = np.zeros_like(x)
        vmax = spec.velocity_clamp * objective.span

        pbest = x.copy()
        pscore = self._evaluate(objective, x)
        g = int(np.argmin(pscore))
        gbest, gscore = pbest[g].copy(), float(pscore[g])
        history = [gscore]

        for _ in range(spec.max_iter):
            r = draw_uniform(streams, (2, objective.dimension))
            r1, r2 = r[:, 0], r[:, 1]
            v = spec.w * v + spec.c1 * r1 * (pbest - x) + spec.c2 * r2 * (gbest - x)
            v = np.clip(v, -vmax, vmax)
            x = objective.clip(x + v)
            scores = self._evaluate(objective, x)
            improved = scores < pscore
            pbest[improved] = x[improved]
            pscore[improved] = scores[improved]
            g = int(np.argmin(pscore))
            if pscore[g] < gscore:
                gbest, gscore = pbest[g].copy(), float(pscore[g])
            history.append(gscore)

        logger.debug("PSO: best %.6g after %d iterations", gscore, spec.max_iter)
        return OptimizationResult(gbest, gscore, history, self.kind)


def pso_minimize(objective: ObjectiveSpec, spec=None, seeds: Optional[np.ndarray] = None) -> OptimizationResult:
    return ParticleSwarmOptimizer(spec).minimize(objective, seeds)
