"""View-based reproduction operators, consensus voting, and the layout ensemble.

An operator looks at rendered views and proposes node IDs; it never touches
populations. :class:`OperatorReproduction` wraps one operator per layout,
validates and repairs each proposal, and fuses the per-layout proposals by
consensus voting.
"""

from __future__ import annotations

import logging
import math
import zlib
from collections import Counter
from concurrent.futures import Executor
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol, Sequence

import numpy as np

from .evo import Candidate, OperatorError, vanilla_crossover, vanilla_mutation
from .graph import Graph, betweenness_centrality
from .layout import Layout, LayoutKind, Positions, compute_layout
from .render import Mode, RenderedView, RenderSpec, render
from .sparsify import SparsifiedDomain
from .validation import (
    MutationRecord,
    ValidationLog,
    check_crossover,
    check_init,
    check_mutation,
    hard_checks_pass,
    repair_crossover,
    repair_init,
    repair_mutation,
)

logger = logging.getLogger(__name__)


class ReproductionOperator(Protocol):
    def propose_init(self, view: RenderedView, n: int, k: int) -> list[list[int]]: ...

    def propose_crossover(self, view_a: RenderedView, view_b: RenderedView, k: int) -> list[int]: ...

    def propose_mutation_removal(self, view: RenderedView) -> int: ...

    def propose_mutation_addition(self, view: RenderedView) -> int: ...


@dataclass(frozen=True)
class EnsembleConfig:
    layouts: tuple[LayoutKind, ...] = (LayoutKind(Layout.KK), LayoutKind(Layout.FR), LayoutKind(Layout.GRAPHOPT))
    vote_threshold: int | None = None
    rng_seed: int = 0

    def __post_init__(self):
        layouts = tuple(l if isinstance(l, LayoutKind) else LayoutKind(Layout(l), rng_seed=self.rng_seed) for l in self.layouts)
        object.__setattr__(self, "layouts", layouts)
        if not layouts:
            raise ValueError("at least one layout is required")
        if self.vote_threshold is None:
            object.__setattr__(self, "vote_threshold", math.ceil(len(layouts) / 2))
        if not 1 <= self.vote_threshold <= len(layouts):
            raise ValueError(f"vote_threshold must lie in [1, {len(layouts)}]")

    @property
    def size(self) -> int:
        return len(self.layouts)


def consensus_voting(proposals: Sequence[Sequence[int]], k: int, threshold: int, g: Graph) -> frozenset[int]:
    """Fuse proposals: nodes with at least ``threshold`` votes first (most votes,
    then smaller ID), then greedy fill by most uncovered neighbors (ties by
    higher degree, then smaller ID)."""
    if not proposals:
        raise ValueError("no proposals to vote over")
    if k > len(g):
        raise ValueError(f"k={k} exceeds graph size {len(g)}")
    votes: Counter[int] = Counter()
    for prop in proposals:
        nodes = set(prop)
        unknown = [v for v in nodes if v not in g]
        if unknown:
            raise KeyError(f"proposal contains unknown nodes {sorted(unknown)}")
        votes.update(nodes)
    qualified = sorted((v for v, c in votes.items() if c >= threshold), key=lambda v: (-votes[v], v))
    chosen = qualified[:k]
    chosen_set = set(chosen)
    covered = set(chosen)
    for v in chosen:
        covered.update(g.neighbors(v))
    degs = g.degrees
    while len(chosen) < k:
        best_key, best = None, None
        for v in g.nodes:
            if v in chosen_set:
                continue
            key = (-sum(1 for u in g.neighbors(v) if u not in covered), -degs[v], v)
            if best_key is None or key < best_key:
                best_key, best = key, v
        chosen.append(best)
        chosen_set.add(best)
        covered.add(best)
        covered.update(g.neighbors(best))
    return frozenset(chosen)


class ViewFactory:
    """Renders a fixed graph under each ensemble layout; positions are cached."""

    def __init__(self, g: Graph, layouts: Sequence[LayoutKind], spec: RenderSpec | None = None):
        self.graph = g
        self.layouts = list(layouts)
        self.spec = spec or RenderSpec()
        self._positions: dict[int, Positions] = {}

    def positions(self, i: int) -> Positions:
        if i not in self._positions:
            self._positions[i] = compute_layout(self.graph, self.layouts[i])
        return self._positions[i]

    def view(self, i: int, mode: Mode, highlighted=()) -> RenderedView:
        return render(self.graph, self.positions(i), self.spec.with_mode(mode), highlighted, self.layouts[i])


# mock operators


class MockProfile(str, Enum):
    DEGREE = "degree"
    BETWEENNESS = "betweenness"
    NOISY = "noisy"


class MockOperator:
    """Offline deterministic stand-in for a vision model.

    Greedy profiles rank nodes by degree (or betweenness) on the viewed
    graph. The noisy profile starts from the degree ranking and corrupts each
    answer slot with probability ``noise`` using a stream keyed by
    ``(seed, request)``, so answers are reproducible and order-independent.
    """

    def __init__(self, profile: MockProfile | str = MockProfile.DEGREE, seed: int = 0, noise: float = 0.3):
        self.profile = MockProfile(profile)
        self.seed = seed
        self.noise = noise
        self._scores: dict[int, tuple[Graph, dict[int, float]]] = {}

    def __repr__(self) -> str:
        return f"MockOperator({self.profile.value}, seed={self.seed})"

    def _score(self, g: Graph) -> dict[int, float]:
        # holding the graph alongside its scores keeps its id from being reused
        hit = self._scores.get(id(g))
        if hit is None or hit[0] is not g:
            if self.profile is MockProfile.BETWEENNESS:
                scores = betweenness_centrality(g)
            else:
                scores = {v: float(d) for v, d in g.degrees.items()}
            hit = self._scores[id(g)] = (g, scores)
        return hit[1]

    def _ranked(self, g: Graph, nodes=None) -> list[int]:
        s = self._score(g)
        return sorted(g.nodes if nodes is None else nodes, key=lambda v: (-s[v], v))

    def _rng(self, phase: str, *parts) -> np.random.Generator:
        payload = repr((phase, parts)).encode()
        return np.random.default_rng([self.seed, zlib.crc32(payload)])

    def _corrupt(self, answer: list[int], g: Graph, rng: np.random.Generator) -> list[int]:
        if self.profile is not MockProfile.NOISY:
            return answer
        nodes = g.nodes
        return [nodes[int(rng.integers(len(nodes)))] if rng.random() < self.noise else v for v in answer]

    def propose_init(self, view: RenderedView, n: int, k: int) -> list[list[int]]:
        ranked = self._ranked(view.graph)
        head = math.ceil(k / 2)
        window = max(min(2 * k, len(ranked)) - head, k - head)
        rng = self._rng("init", n, k)
        out = []
        for i in range(n):
            tail = [ranked[head + (i * (k - head) + j) % window] for j in range(k - head)]
            out.append(self._corrupt(ranked[:head] + tail, view.graph, rng))
        return out

    def propose_crossover(self, view_a: RenderedView, view_b: RenderedView, k: int) -> list[int]:
        union = set(view_a.highlighted) | set(view_b.highlighted)
        answer = self._ranked(view_a.graph, union)[:k]
        rng = self._rng("crossover", tuple(sorted(view_a.highlighted)), tuple(sorted(view_b.highlighted)))
        return self._corrupt(answer, view_a.graph, rng)

    def propose_mutation_removal(self, view: RenderedView) -> int:
        members = view.highlighted
        answer = self._ranked(view.graph, members)[-1] if members else view.graph.nodes[0]
        rng = self._rng("removal", tuple(sorted(members)))
        return self._corrupt([answer], view.graph, rng)[0]

    def propose_mutation_addition(self, view: RenderedView) -> int:
        members = view.highlighted
        outside = [v for v in view.graph.nodes if v not in members]
        answer = self._ranked(view.graph, outside)[0] if outside else view.graph.nodes[0]
        rng = self._rng("addition", tuple(sorted(members)))
        return self._corrupt([answer], view.graph, rng)[0]

    def propose_dismantle(self, view: RenderedView) -> int:
        answer = self._ranked(view.graph)[0]
        rng = self._rng("dismantle", view.graph.nodes)
        return self._corrupt([answer], view.graph, rng)[0]

    def propose_tsp_crossover(self, view_a, view_b, tour_a: Sequence[int], tour_b: Sequence[int]) -> list[int]:
        half = len(tour_a) // 2
        head = list(tour_a[:half])
        taken = set(head)
        return head + [v for v in tour_b if v not in taken]

    def propose_tsp_mutation(self, view: RenderedView, tour: Sequence[int]) -> list[int]:
        """Best single 2-opt segment reversal under the view's node positions."""
        pos = view.positions
        tour = list(tour)
        n = len(tour)

        def d(a, b):
            return math.dist(pos[a], pos[b])

        best_gain, best = 1e-9, None
        for i in range(n - 1):
            for j in range(i + 2, n if i > 0 else n - 1):
                a, b, c, e = tour[i], tour[i + 1], tour[j], tour[(j + 1) % n]
                gain = d(a, b) + d(c, e) - d(a, c) - d(b, e)
                if gain > best_gain:
                    best_gain, best = gain, (i, j)
        if best is None:
            return tour
        i, j = best
        return tour[: i + 1] + tour[i + 1 : j + 1][::-1] + tour[j + 1 :]


def mock_operator(profile: MockProfile | str = MockProfile.DEGREE, seed: int = 0, noise: float = 0.3) -> MockOperator:
    return MockOperator(profile, seed, noise)


# ensemble operators


def _layout_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(2**32))


def _per_layout(ops, n: int) -> list:
    if isinstance(ops, (list, tuple)):
        if len(ops) != n:
            raise ValueError(f"expected {n} operators (one per layout), got {len(ops)}")
        return list(ops)
    return [ops] * n


def _map(executor: Executor | None, fn, items):
    if executor is None:
        return [fn(x) for x in items]
    return list(executor.map(fn, items))


def ensemble_crossover(
    ops,
    views: ViewFactory,
    domain: SparsifiedDomain,
    a: Candidate,
    b: Candidate,
    ens: EnsembleConfig,
    rng: np.random.Generator,
    log: ValidationLog | None = None,
    executor: Executor | None = None,
) -> Candidate:
    """Crossover proposals from every layout, each validated and repaired, fused by voting."""
    ops = _per_layout(ops, ens.size)
    k = len(a.nodes)
    base = _layout_seed(rng)

    def one(i: int):
        label = ens.layouts[i].label
        view_a = views.view(i, Mode.CROSSOVER, a.nodes)
        view_b = views.view(i, Mode.CROSSOVER, b.nodes)
        try:
            proposal = list(ops[i].propose_crossover(view_a, view_b, k))
        except OperatorError as exc:
            logger.info("crossover proposal failed on %s/%s: %s", domain.name, label, exc)
            return None
        reports = check_crossover(proposal, a.nodes, b.nodes, k)
        if log is not None:
            log.record("crossover", reports, domain.name, label)
        if hard_checks_pass(reports):
            return frozenset(proposal)
        if log is not None:
            log.record_repair("crossover", domain.name, label)
        return repair_crossover(proposal, a.nodes, b.nodes, k, np.random.default_rng([base, i]))

    proposals = [p for p in _map(executor, one, range(ens.size)) if p is not None]
    if not proposals:
        logger.warning("all crossover proposals failed on %s; using vanilla crossover", domain.name)
        return vanilla_crossover(a, b, rng)
    fused = consensus_voting(proposals, k, min(ens.vote_threshold, len(proposals)), domain.subgraph)
    return Candidate(fused, None, domain.name)


def ensemble_mutation(
    ops,
    views: ViewFactory,
    domain: SparsifiedDomain,
    c: Candidate,
    ens: EnsembleConfig,
    rng: np.random.Generator,
    log: ValidationLog | None = None,
    executor: Executor | None = None,
) -> Candidate:
    """Two-step (removal, addition) proposals per layout, fused by voting over the proposed sets."""
    ops = _per_layout(ops, ens.size)
    k = len(c.nodes)
    degs = domain.subgraph.degrees

    def one(i: int):
        label = ens.layouts[i].label
        view = views.view(i, Mode.MUTATION, c.nodes)
        try:
            removal = ops[i].propose_mutation_removal(view)
            addition = ops[i].propose_mutation_addition(view)
        except OperatorError as exc:
            logger.info("mutation proposal failed on %s/%s: %s", domain.name, label, exc)
            return None
        reports = check_mutation(c.nodes, removal, addition, domain)
        if log is not None:
            log.record("mutation", reports, domain.name, label)
        if not hard_checks_pass(reports):
            if log is not None:
                log.record_repair("mutation", domain.name, label)
            removal, addition = repair_mutation(c.nodes, removal, addition, domain)
        if log is not None:
            log.record_mutation(
                MutationRecord(removal, addition, degs[removal], degs[addition], log.network, domain.name, label)
            )
        return (c.nodes - {removal}) | {addition}

    proposals = [p for p in _map(executor, one, range(ens.size)) if p is not None]
    if not proposals:
        logger.warning("all mutation proposals failed on %s; using vanilla mutation", domain.name)
        return vanilla_mutation(c, domain, rng)
    fused = consensus_voting(proposals, k, min(ens.vote_threshold, len(proposals)), domain.subgraph)
    return Candidate(fused, None, domain.name)


@dataclass
class OperatorReproduction:
    """Adapts view-based operators to the evolutionary loop on one domain."""

    ops: object
    domain: SparsifiedDomain
    ens: EnsembleConfig = field(default_factory=EnsembleConfig)
    log: ValidationLog | None = None
    executor: Executor | None = None
    spec: RenderSpec | None = None

    def __post_init__(self):
        self.views = ViewFactory(self.domain.subgraph, self.ens.layouts, self.spec)
        self._ops = _per_layout(self.ops, self.ens.size)

    def initialize(self, n: int, k: int, rng: np.random.Generator) -> list[frozenset[int]]:
        per_layout = math.ceil(n / self.ens.size)

        def one(i: int):
            label = self.ens.layouts[i].label
            view = self.views.view(i, Mode.INIT)
            try:
                raw = self._ops[i].propose_init(view, per_layout, k)
            except OperatorError as exc:
                logger.info("init proposal failed on %s/%s: %s", self.domain.name, label, exc)
                return []
            out = []
            for proposal in raw:
                reports = check_init(proposal, self.domain, k)
                if self.log is not None:
                    self.log.record("init", reports, self.domain.name, label)
                if hard_checks_pass(reports):
                    out.append(frozenset(proposal))
                else:
                    if self.log is not None:
                        self.log.record_repair("init", self.domain.name, label)
                    out.append(repair_init(proposal, self.domain, k))
            return out

        batches = _map(self.executor, one, range(self.ens.size))
        merged = [batch[j] for j in range(per_layout) for batch in batches if j < len(batch)]
        if not merged:
            raise OperatorError(f"no layout produced an initial population on {self.domain.name}")
        while len(merged) < n:
            merged.append(merged[len(merged) % len(merged)])
        return merged[:n]

    def crossover(self, a: Candidate, b: Candidate, rng: np.random.Generator) -> frozenset[int]:
        return ensemble_crossover(self._ops, self.views, self.domain, a, b, self.ens, rng, self.log, self.executor).nodes

    def mutate(self, c: Candidate, rng: np.random.Generator) -> frozenset[int]:
        return ensemble_mutation(self._ops, self.views, self.domain, c, self.ens, rng, self.log, self.executor).nodes
