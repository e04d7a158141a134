"""Degree- and community-based graph sparsification, and the mappings between a
sparsified domain and the original graph."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

from .graph import (
    Graph,
    betweenness_centrality,
    connected_components,
    detect_communities,
    largest_connected_component,
)


class Strategy(str, Enum):
    DEGREE = "degree"
    COMMUNITY = "community"


class Fill(str, Enum):
    HEURISTIC = "heuristic"
    RANDOM = "random"


STRATEGY_LABELS = {Strategy.DEGREE: "spars-d", Strategy.COMMUNITY: "spars-c"}


@dataclass(frozen=True)
class SparsifyConfig:
    n_nodes_target: int = 50
    n_edges_target: int = 100
    strategy: Strategy = Strategy.DEGREE
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.n_nodes_target < 2:
            raise ValueError("n_nodes_target must be >= 2")
        if self.n_edges_target < 1:
            raise ValueError("n_edges_target must be >= 1")


@dataclass(frozen=True, eq=False)
class SparsifiedDomain:
    subgraph: Graph
    config: SparsifyConfig
    name: str = ""
    selected_nodes: tuple[int, ...] = field(default=(), repr=False)

    @property
    def origin_nodes(self) -> frozenset[int]:
        return self.subgraph.node_set

    @property
    def nodes(self) -> tuple[int, ...]:
        return self.subgraph.nodes

    def __len__(self) -> int:
        return len(self.subgraph)

    def __contains__(self, v: object) -> bool:
        return v in self.subgraph

    @cached_property
    def betweenness(self) -> dict[int, float]:
        """Betweenness on the domain subgraph (used by heuristic fill/repair)."""
        return betweenness_centrality(self.subgraph)

    @cached_property
    def betweenness_rank(self) -> list[int]:
        """Domain nodes by descending betweenness, ties by smaller ID."""
        bc = self.betweenness
        return sorted(self.subgraph.nodes, key=lambda v: (-bc[v], v))

    def to_manifest(self) -> dict:
        return {
            "name": self.name,
            "strategy": self.config.strategy.value,
            "n_nodes_target": self.config.n_nodes_target,
            "n_edges_target": self.config.n_edges_target,
            "rng_seed": self.config.rng_seed,
            "nodes": list(self.subgraph.nodes),
            "edges": [list(e) for e in self.subgraph.edges()],
            "selected_nodes": list(self.selected_nodes),
            "n_nodes": len(self.subgraph),
            "n_edges": self.subgraph.edge_count,
        }

    @classmethod
    def from_manifest(cls, data: dict) -> "SparsifiedDomain":
        cfg = SparsifyConfig(
            n_nodes_target=data["n_nodes_target"],
            n_edges_target=data["n_edges_target"],
            strategy=Strategy(data["strategy"]),
            rng_seed=data["rng_seed"],
        )
        g = Graph.from_edges([tuple(e) for e in data["edges"]], nodes=data["nodes"])
        return cls(g, cfg, data.get("name", ""), tuple(data.get("selected_nodes", ())))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_manifest(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "SparsifiedDomain":
        return cls.from_manifest(json.loads(Path(path).read_text()))


def _top_k(nodes: Iterable[int], score: dict, k: int) -> list[int]:
    return sorted(nodes, key=lambda v: (-score[v], v))[:k]


def refine_subgraph(g: Graph, v_s: Iterable[int], cfg: SparsifyConfig, name: str = "") -> SparsifiedDomain:
    """Induce on ``v_s``, prune random edges down to the target, keep the LCC."""
    selected = tuple(sorted(set(v_s)))
    induced = g.subgraph(selected)
    edges = induced.edges()
    if len(edges) > cfg.n_edges_target:
        rng = np.random.default_rng(cfg.rng_seed)
        keep = np.sort(rng.choice(len(edges), size=cfg.n_edges_target, replace=False))
        edges = [edges[i] for i in keep]
    pruned = Graph.from_edges(edges)
    if len(pruned) == 0:
        raise ValueError("refinement produced an empty graph (all selected nodes isolated)")
    lcc = largest_connected_component(pruned)
    return SparsifiedDomain(lcc, cfg, name or STRATEGY_LABELS[cfg.strategy], selected)


def select_by_degree(g: Graph, n_nodes: int) -> list[int]:
    return _top_k(g.nodes, g.degrees, n_nodes)


def sparsify_by_degree(g: Graph, cfg: SparsifyConfig, name: str = "") -> SparsifiedDomain:
    if len(g) < cfg.n_nodes_target:
        raise ValueError(f"graph has {len(g)} nodes, fewer than target {cfg.n_nodes_target}")
    return refine_subgraph(g, select_by_degree(g, cfg.n_nodes_target), cfg, name)


def community_quotas(sizes: list[int], n_total: int, n_target: int) -> list[int]:
    return [(size * n_target) // n_total for size in sizes]


def select_by_community(
    g: Graph,
    n_nodes: int,
    betweenness: dict[int, float] | None = None,
) -> list[int]:
    """Per-community floor quotas filled by betweenness rank.

    Communities come from greedy modularity on the LCC; betweenness is taken on
    the full graph. Slots lost to flooring are handed out one at a time to
    communities in descending size order until the target is met.
    """
    lcc = largest_connected_component(g)
    partition = detect_communities(lcc)
    bc = betweenness if betweenness is not None else betweenness_centrality(g)
    groups = partition.members()
    quotas = community_quotas(partition.community_sizes, len(lcc), n_nodes)
    ranked = [sorted(members, key=lambda v: (-bc[v], v)) for members in groups]
    chosen = [r[:q] for r, q in zip(ranked, quotas)]
    taken = list(quotas)
    leftover = n_nodes - sum(quotas)
    order = sorted(range(len(groups)), key=lambda c: (-len(groups[c]), c))
    while leftover > 0:
        progressed = False
        for c in order:
            if leftover == 0:
                break
            if taken[c] < len(ranked[c]):
                chosen[c].append(ranked[c][taken[c]])
                taken[c] += 1
                leftover -= 1
                progressed = True
        if not progressed:
            break
    return sorted(v for grp in chosen for v in grp)


def sparsify_by_community(
    g: Graph,
    cfg: SparsifyConfig,
    name: str = "",
    betweenness: dict[int, float] | None = None,
) -> SparsifiedDomain:
    if len(g) < cfg.n_nodes_target:
        raise ValueError(f"graph has {len(g)} nodes, fewer than target {cfg.n_nodes_target}")
    return refine_subgraph(g, select_by_community(g, cfg.n_nodes_target, betweenness), cfg, name)


def sparsify(g: Graph, cfg: SparsifyConfig, name: str = "", betweenness=None) -> SparsifiedDomain:
    if cfg.strategy is Strategy.DEGREE:
        return sparsify_by_degree(g, cfg, name)
    return sparsify_by_community(g, cfg, name, betweenness)


# domain <-> original mappings


def project_to_original(d: SparsifiedDomain, s: Iterable[int]) -> frozenset[int]:
    """Domain nodes keep their original IDs, so projection is the identity embedding."""
    s = frozenset(s)
    outside = s - d.origin_nodes
    if outside:
        raise KeyError(f"nodes {sorted(outside)} are not in domain {d.name!r}")
    return s


def inject_to_domain(d: SparsifiedDomain, s: Iterable[int]) -> frozenset[int]:
    return frozenset(s) & d.origin_nodes


def fill_nodes(
    d: SparsifiedDomain,
    present: frozenset[int],
    n_missing: int,
    fill: Fill,
    rng: np.random.Generator | None = None,
) -> list[int]:
    """Pick ``n_missing`` domain nodes outside ``present``."""
    if n_missing <= 0:
        return []
    if fill is Fill.HEURISTIC:
        return [v for v in d.betweenness_rank if v not in present][:n_missing]
    pool = [v for v in d.nodes if v not in present]
    if rng is None:
        rng = np.random.default_rng()
    picks = rng.choice(len(pool), size=n_missing, replace=False)
    return [pool[i] for i in picks]


def proj_with_fill(
    d: SparsifiedDomain,
    s: Iterable[int],
    k: int,
    fill: Fill | str = Fill.HEURISTIC,
    rng_seed: int | np.random.Generator | None = None,
) -> frozenset[int]:
    """Inject ``s`` into the domain and top it up to exactly ``k`` nodes."""
    fill = Fill(fill)
    if len(d) < k:
        raise ValueError(f"domain {d.name!r} has {len(d)} nodes, fewer than k={k}")
    kept = inject_to_domain(d, s)
    if len(kept) > k:
        raise ValueError(f"injected set has {len(kept)} nodes, more than k={k}")
    if len(kept) == k:
        return kept
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    return kept | frozenset(fill_nodes(d, kept, k - len(kept), fill, rng))


def check_domain(d: SparsifiedDomain, original: Graph) -> list[str]:
    """Invariant violations of a domain against its original graph (empty if valid)."""
    problems = []
    sub = d.subgraph
    if not sub.node_set <= original.node_set:
        problems.append("domain nodes not a subset of the original graph")
    if any(not original.has_edge(u, v) for u, v in sub.edges()):
        problems.append("domain edge missing from the original graph")
    if len(connected_components(sub)) != 1:
        problems.append("domain subgraph is not connected")
    if len(sub) > d.config.n_nodes_target:
        problems.append(f"{len(sub)} nodes exceeds target {d.config.n_nodes_target}")
    if sub.edge_count > d.config.n_edges_target:
        problems.append(f"{sub.edge_count} edges exceeds target {d.config.n_edges_target}")
    return problems
