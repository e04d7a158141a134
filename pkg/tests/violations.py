"""Seeded generators of proposals violating exactly one named check."""

import numpy as np

from coevo.graph import Graph
from coevo.sparsify import SparsifyConfig, refine_subgraph
from coevo.validation import low_degree_threshold


def hub_domain(rng, n_core=40, n_leaves=3):
    """Dense random core plus a few pendant leaves, so the low-degree percentile
    sits strictly above degree 1."""
    edges = [(i, int(rng.integers(i))) for i in range(1, n_core)]
    while len(edges) < 4 * n_core:
        u, v = map(int, rng.integers(n_core, size=2))
        edges.append((u, v))
    for j in range(n_leaves):
        edges.append((n_core + j, int(rng.integers(n_core))))
    g = Graph.from_edges(edges)
    return refine_subgraph(g, g.nodes, SparsifyConfig(len(g), 10_000))


def _valid_init(rng, d, k):
    degs = d.subgraph.degrees
    t = low_degree_threshold(d)
    ok = [v for v in d.nodes if degs[v] >= t]
    return [ok[i] for i in rng.choice(len(ok), size=k, replace=False)]


def violation(check_id, rng, d, k=8):
    """Return (phase, args) with exactly ``check_id`` violated."""
    nodes = list(d.nodes)
    outside = max(nodes) + 1 + int(rng.integers(100))
    if check_id.startswith("TI"):
        cand = _valid_init(rng, d, k)
        if check_id == "TI1":
            cand[int(rng.integers(k))] = outside
        elif check_id == "TI2":
            cand = cand[:-1] if rng.random() < 0.5 else cand + [next(v for v in nodes if v not in cand and d.subgraph.degrees[v] >= low_degree_threshold(d))]
        else:
            leaves = [v for v in nodes if d.subgraph.degrees[v] == 1]
            cand[int(rng.integers(k))] = leaves[int(rng.integers(len(leaves)))]
        return "init", (cand, d, len(cand) if check_id != "TI2" else k)
    perm = [nodes[i] for i in rng.permutation(len(nodes))]
    a, b = set(perm[:k]), set(perm[k // 2: k // 2 + k])
    union = sorted(a | b)
    if check_id.startswith("TC"):
        child = [union[i] for i in rng.choice(len(union), size=k, replace=False)]
        if check_id == "TC1":
            child = child[:-1] if rng.random() < 0.5 else child + [next(v for v in union if v not in child)]
        elif check_id == "TC2":
            i, j = rng.choice(k, size=2, replace=False)
            child[i] = child[j]
        else:
            non_parent = [v for v in nodes if v not in a and v not in b] + [outside]
            child[int(rng.integers(k))] = non_parent[int(rng.integers(len(non_parent)))]
        return "crossover", (child, a, b, k)
    orig = set(perm[:k])
    rest = perm[k:]
    removal, addition = sorted(orig)[int(rng.integers(k))], rest[int(rng.integers(len(rest)))]
    if check_id == "TM1":
        removal = rest[int(rng.integers(len(rest)))] if rng.random() < 0.5 else outside
    elif check_id == "TM2":
        addition = outside
    else:
        addition = sorted(orig)[int(rng.integers(k))]
    return "mutation", (orig, removal, addition, d)
