import math

import numpy as np
import pytest

from fuzzy_connectome.errors import DivergenceError
from fuzzy_connectome.optimizers import (
    MetaheuristicKind,
    MetaheuristicSpec,
    ObjectiveSpec,
    benchmark_objective,
    ga_minimize,
    gwo_coefficient,
    gwo_minimize,
    gwo_step,
    individual_streams,
    minimize,
    pso_minimize,
    rmse,
)
from fuzzy_connectome.optimizers.gwo import init_state

KINDS = list(MetaheuristicKind)


# ── Error measures ──

def test_rmse_examples():
    assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert rmse([0.0, 0.0, 0.0], [1.0, -1.0, 1.0]) == pytest.approx(1.0)
    assert rmse([3.0, 4.0], [0.0, 0.0]) == pytest.approx(math.sqrt(12.5))
    with pytest.raises(ValueError):
        rmse([1.0], [1.0, 2.0])


# ── Specs and objectives ──

def test_published_defaults():
    pso = MetaheuristicSpec(kind=MetaheuristicKind.PSO)
    assert (pso.c1, pso.c2, pso.w, pso.population, pso.max_iter) == (2.0, 2.0, 0.2, 60, 400)
    ga = MetaheuristicSpec(kind=MetaheuristicKind.GA)
    assert (ga.mutation_rate, ga.crossover_fraction, ga.elite, ga.tournament) == (0.05, 0.8, 5, 2)
    assert MetaheuristicSpec(kind=MetaheuristicKind.GWO).population == 5


def test_ga_population_must_hold_the_elite():
    with pytest.raises(ValueError):
        MetaheuristicSpec(kind=MetaheuristicKind.GA, population=3, elite=5)


def test_objective_bounds_and_divergence():
    with pytest.raises(ValueError):
        ObjectiveSpec(lambda th: 0.0, [0.0, 1.0], [1.0, 1.0])
    objective = ObjectiveSpec(lambda th: float("nan"), [0.0], [1.0])
    with pytest.raises(DivergenceError):
        objective(np.array([0.5]))
    with pytest.raises(ValueError):
        benchmark_objective("nope")


# ── Grey wolf ──

def test_gwo_schedule():
    assert gwo_coefficient(200, 400) == 1.0
    assert gwo_coefficient(400, 400) == 0.0
    assert gwo_coefficient(0, 400) == 2.0


def test_gwo_zero_a_moves_every_wolf_to_the_leader_mean():
    objective = benchmark_objective("sphere", 4)
    rng = np.random.default_rng(0)
    state = init_state(objective.lower + rng.random((6, 4)) * objective.span, objective, 10)
    nxt = gwo_step(state, objective, individual_streams(0, 6), a=0.0)
    np.testing.assert_allclose(nxt.wolves, np.tile(state.leaders.mean(axis=0), (6, 1)))


def test_gwo_hierarchy_holds_every_iteration():
    objective = benchmark_objective("rastrigin", 3)
    rng = np.random.default_rng(1)
    state = init_state(objective.lower + rng.random((8, 3)) * objective.span, objective, 30)
    streams = individual_streams(1, 8)
    for _ in range(30):
        state = gwo_step(state, objective, streams)
        assert list(state.leader_scores) == sorted(state.leader_scores)
        assert state.best_score <= state.scores.min()


def test_gwo_sphere_30():
    spec = MetaheuristicSpec(kind=MetaheuristicKind.GWO, population=5, max_iter=400, seed=0)
    assert gwo_minimize(benchmark_objective("sphere", 30), spec).best_score < 1e-2


# ── Swarm ──

def test_pso_sphere_30():
    spec = MetaheuristicSpec(kind=MetaheuristicKind.PSO, seed=0)
    assert pso_minimize(benchmark_objective("sphere", 30), spec).best_score < 1e-2


def test_pso_without_forces_freezes():
    objective = benchmark_objective("sphere", 3)
    spec = MetaheuristicSpec(kind=MetaheuristicKind.PSO, c1=0.0, c2=0.0, w=0.0, population=10, max_iter=20, seed=2)
    result = pso_minimize(objective, spec)
    initial = objective.lower + np.stack([s.random(3) for s in individual_streams(2, 10)]) * objective.span
    assert result.best_score == min(objective(p) for p in initial)
    assert len(set(result.history)) == 1


# ── Genetic ──

def test_ga_sphere_30():
    spec = MetaheuristicSpec(kind=MetaheuristicKind.GA, seed=0)
    assert ga_minimize(benchmark_objective("sphere", 30), spec).best_score < 1e-1


def test_ga_pure_elitism_keeps_the_best():
    spec = MetaheuristicSpec(kind=MetaheuristicKind.GA, mutation_rate=0.0, crossover_fraction=0.0, population=12, max_iter=25, seed=3)
    result = ga_minimize(benchmark_objective("sphere", 5), spec)
    assert len(set(result.history)) == 1


# ── Shared properties ──

@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("seed", range(5))
def test_two_dimensional_sphere(kind, seed):
    spec = MetaheuristicSpec(kind=kind, max_iter=400, seed=seed)
    assert minimize(benchmark_objective("sphere", 2), spec).best_score < 1e-4


@pytest.mark.parametrize("kind", KINDS)
def test_history_monotone_deterministic_and_in_bounds(kind):
    objective = benchmark_objective("ackley", 4)
    spec = MetaheuristicSpec(kind=kind, population=12, max_iter=40, seed=8)
    a, b = minimize(objective, spec), minimize(objective, spec)
    assert len(a.history) == 41
    assert all(y <= x for x, y in zip(a.history, a.history[1:]))
    np.testing.assert_array_equal(a.best_theta, b.best_theta)
    assert a.history == b.history
    assert np.all(a.best_theta >= objective.lower) and np.all(a.best_theta <= objective.upper)
    assert a.best_score == pytest.approx(objective(a.best_theta))


@pytest.mark.parametrize("kind", KINDS)
def test_seeded_individual_is_never_lost(kind):
    objective = benchmark_objective("sphere", 6)
    seed_theta = np.full(6, 1e-3)
    spec = MetaheuristicSpec(kind=kind, population=12, max_iter=5, seed=4)
    result = minimize(objective, spec, seeds=seed_theta[None, :])
    assert result.best_score <= objective(seed_theta)


def test_individual_streams_are_seeded_and_distinct():
    a = [s.random(4) for s in individual_streams(6, 3)]
    b = [s.random(4) for s in individual_streams(6, 3)]
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a[0], a[1])
    # slot i's stream does not depend on how many slots were spawned
    np.testing.assert_array_equal(individual_streams(6, 5)[1].random(4), a[1])


@pytest.mark.parametrize("kind", KINDS)
def test_threaded_scoring_matches_serial(kind):
    objective = benchmark_objective("rastrigin", 5)
    serial = MetaheuristicSpec(kind=kind, population=12, max_iter=15, seed=9)
    threaded = serial.model_copy(update={"workers": 4})
    a, b = minimize(objective, serial), minimize(objective, threaded)
    assert a.history == b.history
    np.testing.assert_array_equal(a.best_theta, b.best_theta)


@pytest.mark.parametrize("kind", KINDS)
def test_result_does_not_depend_on_scoring_order(kind):
    base = benchmark_objective("ackley", 3)

    class ReversedScoring(ObjectiveSpec):
        def evaluate_all(self, population, workers=1):
            return np.array([self(p) for p in population[::-1]])[::-1]

    reversed_order = ReversedScoring(base.evaluate, base.lower, base.upper)
    spec = MetaheuristicSpec(kind=kind, population=10, max_iter=10, seed=2)
    a, b = minimize(base, spec), minimize(reversed_order, spec)
    assert a.history == b.history
    np.testing.assert_array_equal(a.best_theta, b.best_theta)
