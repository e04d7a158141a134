"""Objective functions: EDV surrogate for influence, cut edges for immunization,
LCC-AUC for dismantling, tour length for TSP, and a Monte-Carlo independent
cascade estimator used only as a validation oracle."""

from __future__ import annotations

import math
from collections import deque
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graph import Graph, connected_components

DEFAULT_P = 0.05
DEFAULT_K = 10


def _check_nodes(g: Graph, s: Iterable[int]) -> frozenset[int]:
    s = frozenset(s)
    unknown = [v for v in s if v not in g]
    if unknown:
        raise KeyError(f"nodes {sorted(unknown)} are not in the graph")
    return s


def _check_p(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"influence probability must lie in [0, 1], got {p}")


def edv(g: Graph, s: Iterable[int], p: float = DEFAULT_P) -> float:
    """Expected diffusion value: ``k + sum_b 1 - (1-p)^delta(b)`` over outside neighbors.

    ``delta(b)`` is the number of seeds adjacent to ``b``.
    """
    s = _check_nodes(g, s)
    _check_p(p)
    hits: dict[int, int] = {}
    for v in s:
        for b in g.neighbors(v):
            if b not in s:
                hits[b] = hits.get(b, 0) + 1
    q = 1.0 - p
    return len(s) + sum(1.0 - q ** d for d in hits.values())


def ic_spread_monte_carlo(
    g: Graph,
    s: Iterable[int],
    p: float,
    trials: int = 1000,
    rng_seed: int | None = 0,
) -> float:
    """Mean activated-node count over independent-cascade simulations."""
    s = _check_nodes(g, s)
    _check_p(p)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(rng_seed)
    total = 0
    for _ in range(trials):
        active = set(s)
        queue = deque(s)
        while queue:
            v = queue.popleft()
            nbrs = [u for u in g.neighbors(v) if u not in active]
            if not nbrs:
                continue
            coins = rng.random(len(nbrs)) < p
            for u, hit in zip(nbrs, coins):
                if hit and u not in active:
                    active.add(u)
                    queue.append(u)
        total += len(active)
    return total / trials


def immunization_cut_edges(g: Graph, s: Iterable[int]) -> int:
    """Number of edges with exactly one endpoint immunized."""
    s = _check_nodes(g, s)
    return sum(1 for v in s for u in g.neighbors(v) if u not in s)


def lcc_auc(g: Graph, removal_sequence: Sequence[int]) -> float:
    """Mean relative LCC size over the removal curve (step sum, lower is better).

    Step ``t`` contributes ``|LCC after t removals| / |V|`` for ``t = 0..T``.
    """
    seq = list(removal_sequence)
    if len(set(seq)) != len(seq):
        raise ValueError("removal sequence contains duplicates")
    _check_nodes(g, seq)
    n = len(g)
    if n == 0:
        raise ValueError("empty graph")
    curve = lcc_curve(g, seq)
    return sum(curve) / (len(seq) + 1) / n


def lcc_curve(g: Graph, seq: Sequence[int]) -> list[int]:
    """LCC sizes before any removal and after each removal of ``seq``.

    Computed in reverse by re-inserting nodes into a union-find.
    """
    removed = set(seq)
    parent: dict[int, int] = {}
    size: dict[int, int] = {}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    best = 0

    def add(v: int) -> None:
        nonlocal best
        parent[v] = v
        size[v] = 1
        for u in g.neighbors(v):
            if u in parent:
                ru, rv = find(u), find(v)
                if ru != rv:
                    if size[ru] < size[rv]:
                        ru, rv = rv, ru
                    parent[rv] = ru
                    size[ru] += size[rv]
        best = max(best, size[find(v)])

    for v in g.nodes:
        if v not in removed:
            add(v)
    curve = [best]
    for v in reversed(seq):
        add(v)
        curve.append(best)
    curve.reverse()
    return curve


def largest_component_size(g: Graph) -> int:
    comps = connected_components(g)
    return len(comps[0]) if comps else 0


def tsp_tour_length(coords: Mapping[int, tuple[float, float]], tour: Sequence[int]) -> float:
    """Euclidean length of the closed tour, including the return edge."""
    tour = list(tour)
    if len(tour) < 3:
        raise ValueError("a tour needs at least three cities")
    if sorted(tour) != sorted(coords):
        raise ValueError("tour is not a permutation of the cities")
    total = 0.0
    for a, b in zip(tour, tour[1:] + tour[:1]):
        (x1, y1), (x2, y2) = coords[a], coords[b]
        total += math.hypot(x2 - x1, y2 - y1)
    return total
