import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import path
from coevo.datasets import surrogate
from coevo.evo import (
    CachedFitness,
    Candidate,
    EvoConfig,
    OperatorError,
    Population,
    init_random,
    init_via_operator,
    run_evolution,
    select_parents,
    slot_rng,
    tournament,
    vanilla_crossover,
    vanilla_mutation,
)
from coevo.fitness import edv
from coevo.graph import Graph
from coevo.operators import EnsembleConfig, MockOperator, OperatorReproduction
from coevo.sparsify import SparsifyConfig, refine_subgraph, sparsify


def domain_of(g):
    return refine_subgraph(g, g.nodes, SparsifyConfig(len(g), 10_000))


def fitness(g):
    return CachedFitness(lambda s: edv(g, s))


def star_of_cliques(n_cliques=5, size=5):
    edges = []
    for c in range(n_cliques):
        base = 1 + c * size
        members = range(base, base + size)
        edges += [(u, v) for u in members for v in members if u < v]
        edges.append((0, base))
    return Graph.from_edges(edges)


def test_init_shape_and_determinism():
    g = surrogate("usair")
    d = sparsify(g, SparsifyConfig(50, 100))
    cfg = EvoConfig(k=10, rng_seed=3)
    pop = init_random(d, cfg, fitness(g))
    assert len(pop) == 20 and all(len(m) == 10 for m in pop.members)
    assert [m.nodes for m in pop.members] == [m.nodes for m in init_random(d, cfg, fitness(g)).members]


def test_init_k_too_large():
    d = domain_of(path(50))
    with pytest.raises(ValueError):
        init_random(d, EvoConfig(k=51))


def test_operator_init_beats_random_min_degree():
    g = star_of_cliques()
    d = domain_of(g)
    cfg = EvoConfig(k=5, rng_seed=1)
    fit = fitness(g)
    rand = init_random(d, cfg, fit)
    repro = OperatorReproduction([MockOperator("degree")], d, EnsembleConfig(("kk",)))
    mock = init_via_operator(d, cfg, repro, fit)
    deg = g.degrees
    rand_avg = np.mean([min(deg[v] for v in m.nodes) for m in rand.members])
    assert len(mock) == 20
    assert all(min(deg[v] for v in m.nodes) >= rand_avg for m in mock.members)


class Broken:
    def initialize(self, n, k, rng):
        raise OperatorError("unreachable")


def test_operator_init_falls_back_to_random():
    d = domain_of(path(20))
    cfg = EvoConfig(k=3, rng_seed=2)
    pop = init_via_operator(d, cfg, Broken(), fitness(path(20)))
    assert [m.nodes for m in pop.members] == [m.nodes for m in init_random(d, cfg).members]


def test_crossover_contracts():
    rng = np.random.default_rng(0)
    a = Candidate(frozenset({1, 2, 3}))
    assert vanilla_crossover(a, a, rng).nodes == a.nodes
    b = Candidate(frozenset({7, 8}))
    c = Candidate(frozenset({1, 2}))
    for seed in range(50):
        child = vanilla_crossover(b, c, np.random.default_rng(seed)).nodes
        assert len(child) == 2 and child <= {1, 2, 7, 8}
    x = vanilla_crossover(b, c, np.random.default_rng(9)).nodes
    assert x == vanilla_crossover(b, c, np.random.default_rng(9)).nodes


@settings(max_examples=100, deadline=None)
@given(st.sets(st.integers(0, 30), min_size=4, max_size=4), st.sets(st.integers(0, 30), min_size=4, max_size=4), st.integers(0, 10**6))
def test_crossover_property(a, b, seed):
    child = vanilla_crossover(Candidate(frozenset(a)), Candidate(frozenset(b)), np.random.default_rng(seed)).nodes
    assert len(child) == 4 and child <= a | b


def test_mutation_contracts():
    d2 = domain_of(path(2))
    assert vanilla_mutation(Candidate(frozenset({0})), d2, np.random.default_rng(0)).nodes == {1}
    with pytest.raises(ValueError):
        vanilla_mutation(Candidate(frozenset({0, 1})), d2, np.random.default_rng(0))
    d = domain_of(path(10))
    c = Candidate(frozenset({1, 2, 3}))
    m = vanilla_mutation(c, d, np.random.default_rng(4)).nodes
    assert len(m) == 3 and len(m & c.nodes) == 2
    assert m == vanilla_mutation(c, d, np.random.default_rng(4)).nodes


def test_tournament_rules():
    hi, lo = Candidate(frozenset({1}), 2.0), Candidate(frozenset({0}), 1.0)
    pop = Population([hi, lo])
    assert all(tournament(pop, np.random.default_rng(s)) is hi for s in range(10))
    tied = Population([Candidate(frozenset({3}), 1.0), Candidate(frozenset({2}), 1.0)])
    assert all(tournament(tied, np.random.default_rng(s)).nodes == {2} for s in range(10))
    a = select_parents(pop, slot_rng(1, 1, 1))
    assert a == select_parents(pop, slot_rng(1, 1, 1))


def test_no_variation_keeps_best():
    g = path(20)
    cfg = EvoConfig(k=3, crossover_prob=0.0, mutation_prob=0.0, generations=5, rng_seed=1)
    res = run_evolution(domain_of(g), cfg, fitness_fn=fitness(g))
    assert res.trace[-1].best == res.trace[0].best


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_best_non_decreasing(seed):
    g = surrogate("netscience")
    d = sparsify(g, SparsifyConfig(50, 100))
    res = run_evolution(d, EvoConfig(generations=8, rng_seed=seed), fitness_fn=fitness(g))
    bests = [r.best for r in res.trace]
    assert bests == sorted(bests)
    assert len(res.population) == 20


def test_run_is_reproducible():
    g = surrogate("usair")
    d = sparsify(g, SparsifyConfig(50, 100))
    cfg = EvoConfig(generations=10, rng_seed=4)
    a = run_evolution(d, cfg, fitness_fn=fitness(g))
    b = run_evolution(d, cfg, fitness_fn=fitness(g))
    assert a.trace == b.trace and a.best == b.best


def test_thirty_generations_improve_on_generation_zero():
    g = surrogate("usair")
    d = sparsify(g, SparsifyConfig(50, 100, "degree"))
    start, end = [], []
    for seed in range(1, 11):
        res = run_evolution(d, EvoConfig(generations=30, rng_seed=seed), fitness_fn=fitness(g))
        start.append(res.trace[0].best)
        end.append(res.trace[-1].best)
    assert np.mean(end) > np.mean(start)


def test_cached_fitness_counts_unique_sets():
    calls = []
    f = CachedFitness(lambda s: calls.append(s) or len(s))
    f({1, 2})
    f(frozenset({2, 1}))
    assert f.evaluations == 1 and len(calls) == 1
