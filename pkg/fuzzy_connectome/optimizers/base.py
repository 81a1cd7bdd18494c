from __future__ import annotations

from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, NonNegativeInt, PositiveInt, model_validator

from ..errors import DivergenceError


class MetaheuristicKind(str, Enum):
    GA = "ga"
    PSO = "pso"
    GWO = "gwo"


DEFAULT_POPULATION = {
    MetaheuristicKind.GA: 60,
    MetaheuristicKind.PSO: 60,
    MetaheuristicKind.GWO: 5,
}


class MetaheuristicSpec(BaseModel):
    """Population optimizer settings; unset fields take the published defaults."""

    model_config = ConfigDict(extra="forbid")

    kind: MetaheuristicKind
    population: Optional[PositiveInt] = None
    max_iter: PositiveInt = 400
    seed: NonNegativeInt = 0
    workers: PositiveInt = Field(1, description="Threads scoring each generation; results do not depend on it")
    # PSO
    c1: NonNegativeFloat = 2.0
    c2: NonNegativeFloat = 2.0
    w: NonNegativeFloat = 0.2
    velocity_clamp: float = Field(0.2, gt=0.0, le=1.0, description="Max |v| as a fraction of each range")
    # GA
    mutation_rate: float = Field(0.05, ge=0.0, le=1.0)
    crossover_fraction: float = Field(0.8, ge=0.0, le=1.0)
    elite: NonNegativeInt = 5
    tournament: PositiveInt = 2
    blend_alpha: NonNegativeFloat = 0.5
    mutation_scale: float = Field(0.1, gt=0.0, description="Initial Gaussian scale as a fraction of each range")

    @model_validator(mode="after")
    def _fill_population(self) -> "MetaheuristicSpec":
        if self.population is None:
            self.population = DEFAULT_POPULATION[self.kind]
        if self.kind is MetaheuristicKind.GA and self.population < self.elite:
            raise ValueError(f"GA population {self.population} smaller than elite count {self.elite}")
        return self


@dataclass
class ObjectiveSpec:
    """Box-bounded scalar objective over θ ∈ R^dim."""

    evaluate: Callable[[np.ndarray], float]
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        self.lower = np.asarray(self.lower, dtype=float).ravel()
        self.upper = np.asarray(self.upper, dtype=float).ravel()
        if self.lower.shape != self.upper.shape or self.lower.size == 0:
            raise ValueError("bounds must be nonempty and of equal length")
        if not np.all(self.lower < self.upper):
            bad = int(np.flatnonzero(~(self.lower < self.upper))[0])
            raise ValueError(f"bound {bad}: lower {self.lower[bad]} not below upper {self.upper[bad]}")

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def clip(self, theta: np.ndarray) -> np.ndarray:
        return np.clip(theta, self.lower, self.upper)

    def __call__(self, theta: np.ndarray) -> float:
        score = float(self.evaluate(theta))
        if not np.isfinite(score):
            raise DivergenceError(f"objective returned {score}")
        return score

    def evaluate_all(self, population: np.ndarray, workers: int = 1) -> np.ndarray:
        """Scores in row order; with workers > 1 the rows are scored on a thread pool."""
        if workers <= 1 or len(population) <= 1:
            return np.array([self(p) for p in population])
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return np.array(list(pool.map(self, population)))


def individual_streams(seed: int, count: int) -> List[np.random.Generator]:
    """
    One independent generator per population slot, spawned from `seed`. Every
    random draw for slot i comes from stream i, so results do not depend on the
    order in which individuals are scored.
    """
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def draw_uniform(streams: Sequence[np.random.Generator], shape: tuple) -> np.ndarray:
    """Stack one `shape` draw per stream into a (len(streams), *shape) array."""
    return np.stack([s.random(shape) for s in streams])


@dataclass
class OptimizationResult:
    best_theta: np.ndarray
    best_score: float
    history: List[float] = field(default_factory=list)
    kind: Optional[MetaheuristicKind] = None


class BaseOptimizer(ABC):
    """Abstract base class for the population optimizers."""

    kind: MetaheuristicKind

    def __init__(self, spec: Optional[MetaheuristicSpec] = None):
        self.spec = spec or MetaheuristicSpec(kind=self.kind)
        if self.spec.kind is not self.kind:
            raise ValueError(f"{type(self).__name__} cannot run a {self.spec.kind.value} spec")

    @abstractmethod
    def minimize(self, objective: ObjectiveSpec, seeds: Optional[np.ndarray] = None) -> OptimizationResult:
        """
        Minimize `objective` over its box. `seeds` (rows of θ) replace the first
        members of the otherwise uniform initial population. `history[0]` is the
        best initial score, then one entry per iteration.
        """
        raise NotImplementedError

    def _streams(self) -> List[np.random.Generator]:
        return individual_streams(self.spec.seed, self.spec.population)

    def _evaluate(self, objective: ObjectiveSpec, population: np.ndarray) -> np.ndarray:
        return objective.evaluate_all(population, self.spec.workers)

    def _initial_population(
        self,
        objective: ObjectiveSpec,
        streams: Sequence[np.random.Generator],
        seeds: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        size = len(streams)
        pop = objective.lower + draw_uniform(streams, (objective.dimension,)) * objective.span
        if seeds is not None:
            seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
            if seeds.shape[1] != objective.dimension:
                raise ValueError(f"seed length {seeds.shape[1]} does not match dimension {objective.dimension}")
            k = min(size, seeds.shape[0])
            pop[:k] = objective.clip(seeds[:k])
        return pop
