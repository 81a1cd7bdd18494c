from typing import Dict, Optional, Type

import numpy as np

from .base import (
    BaseOptimizer,
    MetaheuristicKind,
    MetaheuristicSpec,
    ObjectiveSpec,
    OptimizationResult,
    individual_streams,
)
from .ga import GeneticAlgorithm, ga_minimize
from .gwo import GreyWolfOptimizer, GwoState, gwo_coefficient, gwo_minimize, gwo_step
from .objectives import BENCHMARKS, benchmark_objective, mse, rmse
from .pso import ParticleSwarmOptimizer, pso_minimize

OPTIMIZERS: Dict[MetaheuristicKind, Type[BaseOptimizer]] = {
    MetaheuristicKind.GA: GeneticAlgorithm,
    MetaheuristicKind.PSO: ParticleSwarmOptimizer,
    MetaheuristicKind.GWO: GreyWolfOptimizer,
}


def minimize(
    objective: ObjectiveSpec,
    spec: MetaheuristicSpec,
    seeds: Optional[np.ndarray] = None,
) -> OptimizationResult:
    return OPTIMIZERS[spec.kind](spec).minimize(objective, seeds)


__all__ = [
    "BENCHMARKS",
    "BaseOptimizer",
    "GeneticAlgorithm",
    "GreyWolfOptimizer",
    "GwoState",
    "MetaheuristicKind",
    "MetaheuristicSpec",
    "OPTIMIZERS",
    "ObjectiveSpec",
    "OptimizationResult",
    "ParticleSwarmOptimizer",
    "benchmark_objective",
    "ga_minimize",
    "gwo_coefficient",
    "gwo_minimize",
    "gwo_step",
    "individual_streams",
    "minimize",
    "mse",
    "pso_minimize",
    "rmse",
]
