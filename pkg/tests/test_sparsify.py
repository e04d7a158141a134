import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import complete, path, two_cliques
from coevo.datasets import surrogate
from coevo.graph import Graph, is_connected
from coevo.sparsify import (
    Fill,
    SparsifiedDomain,
    SparsifyConfig,
    check_domain,
    community_quotas,
    inject_to_domain,
    proj_with_fill,
    project_to_original,
    refine_subgraph,
    select_by_community,
    select_by_degree,
    sparsify,
)

# seed 3 edge transcript for K10 pruned to 20 edges
K10_SEED3_EDGES = [
    (0, 2), (0, 3), (0, 4), (0, 6), (0, 7), (1, 3), (1, 4), (1, 9), (2, 4), (2, 5),
    (2, 7), (2, 9), (3, 4), (3, 7), (3, 9), (4, 6), (6, 8), (6, 9), (7, 9), (8, 9),
]


def whole(g, k_edges=1000):
    return refine_subgraph(g, g.nodes, SparsifyConfig(max(2, len(g)), k_edges))


def test_degree_top_k_tie_rule():
    g = Graph.from_edges([(0, 1), (0, 2), (0, 3), (1, 2)])
    # degrees 0:3, 1:2, 2:2, 3:1
    assert select_by_degree(g, 2) == [0, 1]


def test_full_selection_is_identity():
    g = two_cliques()
    d = sparsify(g, SparsifyConfig(10, 100))
    assert d.subgraph == g


def test_degree_sparsify_invariants_and_reference_scan():
    g = surrogate("usair")
    d = sparsify(g, SparsifyConfig(50, 100, "degree", 7))
    assert check_domain(d, g) == []
    ref = sorted(g.nodes, key=lambda v: (-len(g.neighbors(v)), v))[:50]
    assert set(d.selected_nodes) == set(ref)
    assert d.origin_nodes <= set(ref)


def test_quotas():
    assert community_quotas([60, 40], 100, 50) == [30, 20]
    assert community_quotas([34, 33, 33], 100, 50) == [17, 16, 16]


def test_two_clique_community_selection_takes_bridge_ends():
    g = two_cliques()
    bc = oracles.betweenness(oracles.adjacency(g.edges()))
    assert max(bc, key=bc.get) in (4, 5)
    assert select_by_community(g, 4) == [0, 4, 5, 6]


def test_community_leftover_goes_largest_first():
    # three cliques of 4, 3, 3 chained: quotas of 5 slots floor to 2, 1, 1
    edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (4, 5), (4, 6), (5, 6), (7, 8), (7, 9), (8, 9), (3, 4), (6, 7)]
    g = Graph.from_edges(edges)
    chosen = select_by_community(g, 5)
    assert len(chosen) == 5
    assert sum(1 for v in chosen if v < 4) == 3


def test_no_prune_when_under_target():
    g = path(20)
    d = refine_subgraph(g, g.nodes, SparsifyConfig(20, 100))
    assert d.subgraph.edge_count == 19


def test_isolated_node_dropped():
    g = Graph.from_edges([(0, 1), (1, 2), (0, 2)], nodes=[3])
    d = refine_subgraph(g, g.nodes, SparsifyConfig(4, 10))
    assert d.origin_nodes == {0, 1, 2}


def test_k10_pruned_transcript():
    g = complete(10)
    d = refine_subgraph(g, g.nodes, SparsifyConfig(10, 20, rng_seed=3))
    pruned = Graph.from_edges(K10_SEED3_EDGES)
    assert d.subgraph.edges() == K10_SEED3_EDGES
    assert d.subgraph.edge_count == 20 and is_connected(d.subgraph)
    assert d.subgraph == pruned


def test_projection_and_injection():
    d = whole(path(10))
    assert project_to_original(d, []) == frozenset()
    assert project_to_original(d, [5, 9]) == {5, 9}
    with pytest.raises(KeyError):
        project_to_original(d, [5, 99])
    assert inject_to_domain(d, [1, 2]) == {1, 2}
    assert inject_to_domain(d, [100, 200]) == frozenset()
    assert inject_to_domain(d, [1, 2, 100]) == {1, 2}


def test_proj_with_fill():
    d = whole(path(10))
    assert proj_with_fill(d, [1, 2, 3], 3) == {1, 2, 3}
    # middle of the path is most central
    assert proj_with_fill(d, [0, 9], 4, Fill.HEURISTIC) == {0, 9, 4, 5}
    with pytest.raises(ValueError):
        proj_with_fill(d, [0], 11)


def test_random_fill_is_seeded():
    d = whole(path(10))
    a = proj_with_fill(d, [0], 5, Fill.RANDOM, 4)
    assert a == proj_with_fill(d, [0], 5, Fill.RANDOM, 4)
    assert len(a) == 5 and 0 in a


def test_manifest_round_trip(tmp_path):
    g = surrogate("netscience")
    d = sparsify(g, SparsifyConfig(50, 100, "community", 1))
    d.save(tmp_path / "d.json")
    back = SparsifiedDomain.load(tmp_path / "d.json")
    assert back.subgraph == d.subgraph and back.name == d.name and back.config == d.config


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 1000), st.sampled_from(["degree", "community"]), st.integers(5, 30), st.integers(5, 60))
def test_sparsify_invariants(seed, strategy, nv, ne):
    g = surrogate("usair", seed=seed % 4)
    cfg = SparsifyConfig(nv, ne, strategy, seed)
    d = sparsify(g, cfg)
    assert check_domain(d, g) == []
    again = sparsify(g, cfg)
    assert again.subgraph == d.subgraph


@settings(max_examples=50, deadline=None)
@given(st.sets(st.integers(0, 30), max_size=8), st.integers(1, 8), st.sampled_from(list(Fill)), st.integers(0, 99))
def test_proj_with_fill_size(s, k, fill, seed):
    d = whole(path(12))
    kept = inject_to_domain(d, s)
    if len(kept) > k:
        with pytest.raises(ValueError):
            proj_with_fill(d, s, k, fill, seed)
        return
    out = proj_with_fill(d, s, k, fill, seed)
    assert len(out) == k and kept <= out <= d.origin_nodes
