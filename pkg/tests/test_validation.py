import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import path
from coevo.graph import Graph
from coevo.sparsify import SparsifyConfig, refine_subgraph
from coevo.validation import (
    CHECK_IDS,
    CrossoverContext,
    InitContext,
    MutationContext,
    MutationRecord,
    ValidationEvent,
    ValidationLog,
    check_crossover,
    check_init,
    check_mutation,
    hard_checks_pass,
    low_degree_threshold,
    repair,
    repair_crossover,
    repair_init,
    repair_mutation,
    validity_counts,
    validity_stats,
    write_validity_csv,
)
from violations import hub_domain, violation

CHECKS = {"init": check_init, "crossover": check_crossover, "mutation": check_mutation}


def whole(g):
    return refine_subgraph(g, g.nodes, SparsifyConfig(len(g), 10_000))


def failed(reports):
    return {r.check_id for r in reports if not r.passed}


def test_init_checks():
    d = whole(path(10))
    assert failed(check_init([2, 3, 4], d, 3)) == set()
    assert failed(check_init([2, 3], d, 3)) == {"TI2"}
    assert failed(check_init([2, 3, 42], d, 3)) == {"TI1"}


def test_low_degree_percentile_on_hub_domain():
    # K6 core with two pendant leaves: degrees [5]*6 + [6, 6] on the attach points, leaves 1
    edges = [(u, v) for u in range(6) for v in range(u + 1, 6)] + [(0, 6), (1, 7)]
    extra = [(u, v) for u in range(8, 20) for v in range(u + 1, 20)] + [(5, 8)]
    d = whole(Graph.from_edges(edges + extra))
    degs = sorted(d.subgraph.degrees.values())
    # linear-interpolated 10th percentile
    pos = 0.1 * (len(degs) - 1)
    lo = int(pos)
    ref = degs[lo] + (degs[lo + 1] - degs[lo]) * (pos - lo)
    assert low_degree_threshold(d) == pytest.approx(ref)
    assert ref > 1
    reports = check_init([6, 2, 3], d, 3)
    ti3 = next(r for r in reports if r.check_id == "TI3")
    assert not ti3.passed and ti3.offending_nodes == {6}
    assert hard_checks_pass(reports)


def test_crossover_checks():
    a, b = {1, 2}, {3, 4}
    assert failed(check_crossover([1, 5], a, b, 2)) == {"TC3"}
    assert failed(check_crossover([1, 1], a, b, 2)) == {"TC2"}
    assert failed(check_crossover([1, 2], a, b, 2)) == set()


def test_mutation_checks():
    d = whole(path(10))
    assert failed(check_mutation({1, 2}, 5, 6, d)) == {"TM1"}
    assert failed(check_mutation({1, 2}, 1, 2, d)) == {"TM3"}
    assert failed(check_mutation({1, 2}, 1, 42, d)) == {"TM2"}
    assert failed(check_mutation({1, 2}, 1, 6, d)) == set()


def test_crossover_repair_seeded():
    out = repair_crossover([1, 5], {1, 2}, {3, 4}, 2, np.random.default_rng(0))
    assert 1 in out and 5 not in out and len(out) == 2 and out <= {1, 2, 3, 4}
    assert out == repair_crossover([1, 5], {1, 2}, {3, 4}, 2, np.random.default_rng(0))


def test_init_repair_uses_betweenness():
    d = whole(path(9))
    assert repair_init([0, 1, 99], d, 3) == {0, 1, 4}


def test_repair_idempotent_on_valid():
    d = whole(path(9))
    assert repair_init([2, 3, 5], d, 3) == {2, 3, 5}
    assert repair_crossover([1, 3], {1, 2}, {3, 4}, 2, np.random.default_rng(0)) == {1, 3}
    assert repair_mutation({1, 2}, 1, 5, d) == (1, 5)


def test_repair_dispatch():
    d = whole(path(9))
    assert repair([0, 99], InitContext(d), 2) == {0, 4}
    assert repair([1, 9], CrossoverContext(frozenset({1}), frozenset({2})), 2) == {1, 2}
    assert len(repair([0, 0, 1], MutationContext(frozenset({0, 1}), d), 2)) == 2
    with pytest.raises(TypeError):
        repair([1], object(), 1)


@pytest.mark.parametrize("check_id", CHECK_IDS)
def test_generated_violations_detected_and_repaired(check_id):
    rng = np.random.default_rng(sum(map(ord, check_id)))
    for _ in range(200):
        d = hub_domain(rng)
        phase, args = violation(check_id, rng, d)
        reports = CHECKS[phase](*args)
        assert failed(reports) == {check_id}
        if phase == "init":
            cand, dom, k = args
            fixed = repair_init(cand, dom, 8)
            assert hard_checks_pass(check_init(sorted(fixed), dom, 8))
        elif phase == "crossover":
            child, a, b, k = args
            fixed = repair_crossover(child, a, b, k, rng)
            assert hard_checks_pass(check_crossover(sorted(fixed), a, b, k))
        else:
            orig, rem, add, dom = args
            r, a = repair_mutation(orig, rem, add, dom)
            assert hard_checks_pass(check_mutation(orig, r, a, dom))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 30), max_size=12), st.integers(1, 10))
def test_init_repair_always_valid(cand, k):
    d = whole(path(20))
    fixed = repair_init(cand, d, k)
    assert hard_checks_pass(check_init(sorted(fixed), d, k))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 30), max_size=12), st.sets(st.integers(0, 20), min_size=3, max_size=6), st.sets(st.integers(0, 20), min_size=3, max_size=6), st.integers(0, 99))
def test_crossover_repair_always_valid(child, a, b, seed):
    k = min(len(a), len(b))
    fixed = repair_crossover(child, a, b, k, np.random.default_rng(seed))
    assert hard_checks_pass(check_crossover(sorted(fixed), a, b, k))


def events(entries):
    return [ValidationEvent("mutation", cid, ok, "net", "spars-d", "KK") for cid, ok in entries]


def test_stats_counts():
    assert validity_stats(events([("TM1", True)] * 4)) == {("net", "spars-d", "KK"): {"TM1": 1.0}}
    ev = events([("TM3", True)] * 9 + [("TM3", False)])
    assert validity_stats(ev)[("net", "spars-d", "KK")]["TM3"] == pytest.approx(0.9)
    assert "TM1" not in validity_stats(ev)[("net", "spars-d", "KK")]
    assert validity_counts(ev)[("net", "spars-d", "KK")]["TM3"] == (9, 10)


def test_log_and_csv(tmp_path):
    log = ValidationLog(network="n")
    log.record("init", check_init([0, 1], whole(path(5)), 2), "d", "KK")
    log.record_repair("init", "d", "KK")
    log.record_mutation(MutationRecord(1, 2, 1, 2, "n", "d", "KK"))
    assert len(log.events) == 4 and len(log.mutations) == 1
    write_validity_csv(validity_stats(log.events), tmp_path / "v.csv")
    lines = (tmp_path / "v.csv").read_text().splitlines()
    assert lines[0].startswith("network,sparsification,layout,TI1")
    assert lines[1].split(",")[3:6] == ["1.000000", "1.000000", lines[1].split(",")[5]]
    assert lines[1].split(",")[6] == ""
