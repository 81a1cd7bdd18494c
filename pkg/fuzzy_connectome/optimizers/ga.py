"""
Real-coded genetic algorithm.

Each generation keeps the `elite` best individuals unchanged. Of the
remaining children, `crossover_fraction` are BLX-α blends of two
tournament-selected parents; the rest are tournament-selected parents with
per-gene Gaussian mutation, whose scale shrinks linearly to zero over the run.
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from .base import BaseOptimizer, MetaheuristicKind, ObjectiveSpec, OptimizationResult

logger = logging.getLogger(__name__)


class GeneticAlgorithm(BaseOptimizer):
    kind = MetaheuristicKind.GA

    def _tournament(self, scores: np.ndarray, rng: np.random.Generator) -> int:
        entrants = rng.integers(0, scores.size, size=self.spec.tournament)
        return int(entrants[np.argmin(scores[entrants])])

    def _crossover(self, pop: np.ndarray, scores: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        a = pop[self._tournament(scores, rng)]
        b = pop[self._tournament(scores, rng)]
        u = rng.uniform(-self.spec.blend_alpha, 1.0 + self.spec.blend_alpha, size=a.shape)
        return a + u * (b - a)

    def _mutation(self, pop: np.ndarray, scores: np.ndarray, rng: np.random.Generator, scale: np.ndarray) -> np.ndarray:
        parent = pop[self._tournament(scores, rng)]
        mask = rng.random(parent.shape) < self.spec.mutation_rate
        return parent + mask * rng.standard_normal(parent.shape) * scale

    def minimize(self, objective: ObjectiveSpec, seeds: Optional[np.ndarray] = None) -> OptimizationResult:
        spec = self.spec
        streams = self._streams()
        pop = self._initial_population(objective, streams, seeds)
        scores = self._evaluate(objective, pop)
        order = np.argsort(scores, kind="stable")
        history = [float(scores[order[0]])]

        n_elite = min(spec.elite, pop.shape[0])
        n_children = pop.shape[0] - n_elite
        n_cross = int(round(spec.crossover_fraction * n_children))
        # child j of every generation draws from the stream of slot n_elite + j
        child_streams = streams[n_elite:]

        for gen in range(spec.max_iter):
            order = np.argsort(scores, kind="stable")
            elites = pop[order[:n_elite]]
            elite_scores = scores[order[:n_elite]]

            scale = spec.mutation_scale * objective.span * (1.0 - gen / spec.max_iter)
            children = np.array([
                self._crossover(pop, scores, rng) if j < n_cross else self._mutation(pop, scores, rng, scale)
                for j, rng in enumerate(child_streams)
            ]).reshape(n_children, objective.dimension)
            children = objective.clip(children)
            pop = np.vstack([elites, children])
            scores = np.concatenate([elite_scores, self._evaluate(objective, children)])
            history.append(float(scores.min()))

        best = int(np.argmin(scores))
        logger.debug("GA: best %.6g after %d generations", scores[best], spec.max_iter)
        return OptimizationResult(pop[best].copy(), float(scores[best]), history, self.kind)


def ga_minimize(objective: ObjectiveSpec, spec=None, seeds: Optional[np.ndarray] = None) -> OptimizationResult:
    return GeneticAlgorithm(spec).minimize(objective, seeds)
