import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, settings, strategies as st

from conftest import path
from coevo.cooperative import (
    CoopConfig,
    CooperativeRunError,
    EliteEntry,
    ElitePool,
    inject_elite,
    pool_add,
    prune_by_age,
    request_elite,
    run_cooperative,
    worker_configs,
)
from coevo.datasets import surrogate
from coevo.evo import CachedFitness, Candidate, EvoConfig, Population, VanillaReproduction, run_evolution
from coevo.fitness import edv
from coevo.sparsify import Fill, SparsifyConfig, proj_with_fill, refine_subgraph, sparsify
from coevo.tasks import SetTaskConfig, build_domains


def entry(fit, gen, dom="a", sol=(1,)):
    return EliteEntry(frozenset(sol), fit, gen, dom)


def test_pool_add_basic():
    p = pool_add(ElitePool(), entry(1.0, 1))
    assert len(p) == 1
    full = ElitePool(tuple(entry(10.0 + i, 3) for i in range(10)), capacity=10)
    full = replace(full, entries=tuple(sorted(full.entries, key=lambda e: -e.fitness)))
    assert entry(1.0, 3) not in pool_add(full, entry(1.0, 3)).entries


def test_duplicates_kept():
    p = pool_add(pool_add(ElitePool(), entry(2.0, 1)), entry(2.0, 2))
    assert len(p) == 2
    # stable: the later equal-fitness entry goes after
    assert [e.generation for e in p.entries] == [1, 2]


def test_age_pruning():
    pool = ElitePool(tuple(entry(1.0, g) for g in (1, 3, 5)), max_age=2)
    assert [e.generation for e in prune_by_age(pool).entries] == [3, 5]
    same = ElitePool(tuple(entry(1.0, 4) for _ in range(3)), max_age=0)
    assert len(prune_by_age(same)) == 3
    zero = ElitePool(tuple(entry(1.0, g) for g in (1, 3, 5)), max_age=0)
    assert [e.generation for e in prune_by_age(zero).entries] == [5]


def test_request_elite():
    assert request_elite(ElitePool(), "a") is None
    own = ElitePool((entry(3.0, 1, "a"),))
    assert request_elite(own, "a") is None
    two = ElitePool((entry(3.0, 1, "b", (1,)), entry(5.0, 1, "c", (2,))))
    assert request_elite(two, "a").fitness == 5.0


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.tuples(st.floats(-100, 100, allow_nan=False), st.integers(0, 40)), max_size=40),
    st.integers(0, 8),
    st.integers(1, 12),
)
def test_pool_invariants(adds, max_age, capacity):
    pool = ElitePool((), max_age, capacity)
    for fit, gen in adds:
        pool = pool_add(pool, entry(fit, gen))
        fits = [e.fitness for e in pool.entries]
        assert fits == sorted(fits, reverse=True)
        assert len(pool) <= capacity
        g_now = pool.current_generation
        assert all(g_now - e.generation <= max_age for e in pool.entries)


def line_domain(n=12):
    g = path(n)
    return g, refine_subgraph(g, g.nodes, SparsifyConfig(n, 1000))


def test_inject_rejects_weaker_and_accepts_stronger():
    g, d = line_domain()
    fit = CachedFitness(lambda s: edv(g, s, 0.5))
    pop = Population([Candidate(frozenset({0, 1}), fit({0, 1})), Candidate(frozenset({0, 11}), fit({0, 11}))])
    # equal to the weakest member is not an improvement
    weak = EliteEntry(frozenset({10, 11}), fit({10, 11}), 1, "x")
    same, cand = inject_elite(pop, d, weak, 2, Fill.HEURISTIC, np.random.default_rng(0), fit)
    assert cand is None and same is pop
    strong = EliteEntry(frozenset({2, 7}), fit({2, 7}), 1, "x")
    new, cand = inject_elite(pop, d, strong, 2, Fill.HEURISTIC, np.random.default_rng(0), fit)
    assert cand.nodes == {2, 7} and len(new) == 2 and cand in new.members


def test_inject_outside_entry_uses_fill():
    g, d = line_domain()
    fit = CachedFitness(lambda s: edv(g, s, 0.5))
    pop = Population([Candidate(frozenset({0, 1}), fit({0, 1})), Candidate(frozenset({0, 11}), fit({0, 11}))])
    e = EliteEntry(frozenset({100, 200}), 99.0, 1, "x")
    expected = proj_with_fill(d, e.solution, 2, Fill.HEURISTIC)
    assert expected == {5, 6}
    new, cand = inject_elite(pop, d, e, 2, Fill.HEURISTIC, np.random.default_rng(0), fit)
    assert cand.nodes == expected and cand.fitness == edv(g, expected, 0.5)


def usair_domains():
    g = surrogate("usair")
    return g, build_domains(g, SetTaskConfig())


def test_infinite_interval_equals_independent_runs():
    g, doms = usair_domains()
    fit = CachedFitness(lambda s: edv(g, s))
    evo = EvoConfig(generations=12, rng_seed=5)
    coop = CoopConfig(transfer_interval=10_000)
    rep = run_cooperative(doms, evo, coop, fit)
    assert not [e for e in rep.pool_history]
    for d, c, trace in zip(doms, worker_configs(evo, coop, 2), rep.worker_traces):
        assert run_evolution(d, c, fitness_fn=fit).trace == trace
    assert rep.best.fitness == max(b.fitness for b in rep.worker_bests)


def test_identical_domains_give_identical_traces():
    g, doms = usair_domains()
    d = doms[0]
    twin = replace(d, name="twin")
    fit = CachedFitness(lambda s: edv(g, s))
    rep = run_cooperative([d, twin], EvoConfig(generations=10, rng_seed=1), CoopConfig(), fit, seeds=[7, 7])
    assert rep.worker_traces[0] == rep.worker_traces[1]


def test_cooperative_is_reproducible_and_logs_exchanges():
    g, doms = usair_domains()
    evo = EvoConfig(generations=10, rng_seed=2)
    a = run_cooperative(doms, evo, CoopConfig(), CachedFitness(lambda s: edv(g, s)))
    b = run_cooperative(doms, evo, CoopConfig(), CachedFitness(lambda s: edv(g, s)))
    assert a.worker_traces == b.worker_traces and a.pool_history == b.pool_history
    gens = sorted({e.generation for e in a.pool_history})
    assert gens == [2, 4, 6, 8, 10]
    assert [c.population_size for c in a.worker_configs] == [10, 10]


def test_worker_failure_keeps_partial_report():
    g, doms = usair_domains()

    class Boom(VanillaReproduction):
        def mutate(self, c, rng):
            raise RuntimeError("boom")

    evo = EvoConfig(generations=20, mutation_prob=1.0, rng_seed=1)
    with pytest.raises(CooperativeRunError) as info:
        run_cooperative(doms, evo, CoopConfig(), CachedFitness(lambda s: edv(g, s)), lambda d, i: Boom(d))
    assert info.value.report.error is not None


def test_needs_two_distinct_domains():
    g, doms = usair_domains()
    with pytest.raises(ValueError):
        run_cooperative(doms[:1], EvoConfig(), CoopConfig(), lambda s: 0.0)
    with pytest.raises(ValueError):
        run_cooperative([doms[0], doms[0]], EvoConfig(), CoopConfig(), lambda s: 0.0)
