"""Task adapters: influence maximization, immunization (set selection over
sparsified domains), sequential network dismantling, and TSP over permutations."""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .cooperative import CoopConfig, CoopReport, run_cooperative
from .evo import CachedFitness, EvoConfig, EvoResult, OperatorError, VanillaReproduction, run_evolution, slot_rng
from .fitness import DEFAULT_P, edv, ic_spread_monte_carlo, immunization_cut_edges, lcc_auc, tsp_tour_length
from .graph import Graph, betweenness_centrality
from .layout import Layout, LayoutKind, compute_layout
from .mllm import MLLMOperator, Task, VisionClient
from .operators import EnsembleConfig, MockOperator, OperatorReproduction
from .render import Mode, RenderSpec, render
from .sparsify import SparsifiedDomain, SparsifyConfig, Strategy, sparsify
from .validation import ValidationLog

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OperatorConfig:
    """Which reproduction scheme to use and how to ensemble it.

    ``kind`` is ``vanilla``, ``mock`` or ``mllm``. With ``ensemble`` off only
    the first layout is used.
    """

    kind: str = "vanilla"
    profile: str = "degree"
    noise: float = 0.3
    seed: int = 0
    layouts: tuple[str, ...] = ("kk", "fr", "graphopt")
    ensemble: bool = True
    vote_threshold: int | None = None
    init: str = "random"

    def __post_init__(self):
        if self.kind not in ("vanilla", "mock", "mllm"):
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.init not in ("random", "operator"):
            raise ValueError(f"unknown init {self.init!r}")
        object.__setattr__(self, "layouts", tuple(Layout(l).value for l in self.layouts))
        if not self.layouts:
            raise ValueError("at least one layout is required")

    def ensemble_config(self, layout_seed: int = 0) -> EnsembleConfig:
        layouts = self.layouts if self.ensemble else self.layouts[:1]
        return EnsembleConfig(tuple(LayoutKind(Layout(l), rng_seed=layout_seed) for l in layouts),
                              self.vote_threshold if self.ensemble else None, layout_seed)

    def build_ops(self, task: Task, client: VisionClient | None = None) -> list:
        n = self.ensemble_config().size
        if self.kind == "mock":
            return [MockOperator(self.profile, self.seed + i, self.noise) for i in range(n)]
        if self.kind == "mllm":
            if client is None:
                raise ValueError("mllm operator needs a VisionClient")
            return [MLLMOperator(client, task)] * n
        raise ValueError("vanilla operators have no view-based ops")


def make_reproduction_factory(
    op_cfg: OperatorConfig,
    task: Task,
    log: ValidationLog | None = None,
    client: VisionClient | None = None,
    ops: Sequence | None = None,
    spec: RenderSpec | None = None,
):
    """``factory(domain, worker_index)`` building each worker's reproduction scheme."""
    if op_cfg.kind == "vanilla" and ops is None:
        return lambda domain, i: VanillaReproduction(domain)
    ens = op_cfg.ensemble_config()
    if ops is not None:
        ops = list(ops)
        if len(ops) == 1:
            ops = ops * ens.size
        if len(ops) != ens.size:
            raise ValueError(f"got {len(ops)} operators for {ens.size} layouts")
    shared = ops if ops is not None else op_cfg.build_ops(task, client)
    return lambda domain, i: OperatorReproduction(shared, domain, ens, log, spec=spec)


# set-selection tasks


@dataclass(frozen=True)
class SetTaskConfig:
    strategies: tuple[str, ...] = ("degree", "community")
    n_nodes: int = 50
    n_edges: int = 100
    sparsify_seed: int = 0
    mode: str = "coop"
    evo: EvoConfig = field(default_factory=EvoConfig)
    coop: CoopConfig = field(default_factory=CoopConfig)
    operator: OperatorConfig = field(default_factory=OperatorConfig)
    p: float = DEFAULT_P
    mc_trials: int = 0

    def __post_init__(self):
        object.__setattr__(self, "strategies", tuple(Strategy(s).value for s in self.strategies))
        if self.mode not in ("single", "coop"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.strategies:
            raise ValueError("at least one sparsification strategy is required")
        if self.mode == "coop" and len(self.strategies) < 2:
            raise ValueError("coop mode needs at least two strategies")


@dataclass
class SetTaskReport:
    best: frozenset[int]
    fitness: float
    traces: dict[str, list]
    domains: list[SparsifiedDomain]
    coop: CoopReport | None = None
    validation: ValidationLog | None = None
    mc_spread: float | None = None
    evaluations: int = 0


def build_domains(g: Graph, cfg: SetTaskConfig, betweenness: dict[int, float] | None = None) -> list[SparsifiedDomain]:
    out = []
    for s in cfg.strategies:
        scfg = SparsifyConfig(cfg.n_nodes, cfg.n_edges, Strategy(s), cfg.sparsify_seed)
        if scfg.strategy is Strategy.COMMUNITY and betweenness is None:
            betweenness = betweenness_centrality(g)
        out.append(sparsify(g, scfg, betweenness=betweenness))
    return out


def _run_set_task(
    g: Graph,
    cfg: SetTaskConfig,
    task: Task,
    objective: Callable[[frozenset], float],
    domains: Sequence[SparsifiedDomain] | None,
    client: VisionClient | None,
    ops: Sequence | None,
    log: ValidationLog | None,
) -> SetTaskReport:
    domains = list(domains) if domains is not None else build_domains(g, cfg)
    log = log if log is not None else ValidationLog()
    fitness_fn = CachedFitness(objective)
    factory = make_reproduction_factory(cfg.operator, task, log, client, ops)
    init = cfg.operator.init
    if cfg.mode == "single":
        dom = domains[0]
        res: EvoResult = run_evolution(dom, cfg.evo, factory(dom, 0), fitness_fn, init)
        report = SetTaskReport(res.best.nodes, res.best.fitness, {dom.name: res.trace}, domains, None, log)
    else:
        coop = run_cooperative(domains, cfg.evo, cfg.coop, fitness_fn, factory, init)
        traces = {d.name: t for d, t in zip(domains, coop.worker_traces)}
        report = SetTaskReport(coop.best.nodes, coop.best.fitness, traces, domains, coop, log)
    report.evaluations = fitness_fn.evaluations
    return report


def run_influence_maximization(
    g: Graph,
    cfg: SetTaskConfig = SetTaskConfig(),
    domains: Sequence[SparsifiedDomain] | None = None,
    client: VisionClient | None = None,
    ops: Sequence | None = None,
    log: ValidationLog | None = None,
) -> SetTaskReport:
    report = _run_set_task(g, cfg, Task.IM, lambda s: edv(g, s, cfg.p), domains, client, ops, log)
    if cfg.mc_trials:
        report.mc_spread = ic_spread_monte_carlo(g, report.best, cfg.p, cfg.mc_trials, cfg.evo.rng_seed)
    return report


def run_immunization(
    g: Graph,
    cfg: SetTaskConfig = SetTaskConfig(),
    domains: Sequence[SparsifiedDomain] | None = None,
    client: VisionClient | None = None,
    ops: Sequence | None = None,
    log: ValidationLog | None = None,
) -> SetTaskReport:
    """Same loop as influence maximization, maximizing cut edges. There is no
    immunization init prompt, so operator init falls back to random."""
    return _run_set_task(
        g, cfg, Task.IMMUNIZATION, lambda s: float(immunization_cut_edges(g, s)), domains, client, ops, log
    )


# dismantling


@dataclass(frozen=True)
class DismantleConfig:
    budget: int | None = None
    layouts: tuple[str, ...] = ("kk",)
    layout_seed: int = 0

    def resolve_budget(self, g: Graph) -> int:
        b = max(1, round(0.1 * len(g))) if self.budget is None else self.budget
        if not 0 <= b <= len(g):
            raise ValueError(f"budget {b} outside [0, {len(g)}]")
        return b


@dataclass
class DismantleReport:
    sequence: list[int]
    auc: float
    fallbacks: int = 0
    votes: list[dict[int, int]] = field(default_factory=list)


def modal_node(proposals: Sequence[int], g: Graph) -> int:
    """Most-voted node; ties by higher degree, then smaller ID."""
    counts = Counter(proposals)
    degs = g.degrees
    return min(counts, key=lambda v: (-counts[v], -degs[v], v))


def max_degree_node(g: Graph) -> int:
    degs = g.degrees
    return min(g.nodes, key=lambda v: (-degs[v], v))


def run_dismantling(
    g: Graph,
    cfg: DismantleConfig = DismantleConfig(),
    ops: Sequence | object | None = None,
    spec: RenderSpec | None = None,
) -> DismantleReport:
    """Remove one node per step as chosen by the operator(s) on a fresh
    rendering of the remaining graph; several layouts vote by mode."""
    budget = cfg.resolve_budget(g)
    layouts = [LayoutKind(Layout(l), rng_seed=cfg.layout_seed) for l in cfg.layouts]
    ops = list(ops) if isinstance(ops, (list, tuple)) else [ops] * len(layouts)
    if len(ops) != len(layouts):
        raise ValueError(f"expected {len(layouts)} operators, got {len(ops)}")
    spec = (spec or RenderSpec()).with_mode(Mode.INIT)
    seq: list[int] = []
    current = g
    report = DismantleReport(seq, 1.0)
    for _ in range(budget):
        proposals = []
        if ops[0] is not None:
            for op, lk in zip(ops, layouts):
                view = render(current, compute_layout(current, lk), spec, (), lk)
                try:
                    v = op.propose_dismantle(view)
                except OperatorError as exc:
                    logger.info("dismantling proposal failed on %s: %s", lk.label, exc)
                    continue
                if v in current:
                    proposals.append(v)
        if proposals:
            choice = modal_node(proposals, current)
            report.votes.append(dict(Counter(proposals)))
        else:
            choice = max_degree_node(current)
            report.fallbacks += 1
            report.votes.append({})
            if ops[0] is not None:
                logger.warning("no valid dismantling proposal; removing max-degree node %d", choice)
        seq.append(choice)
        current = current.without_nodes([choice])
    report.auc = lcc_auc(g, seq)
    return report


def random_removal_auc(g: Graph, budget: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    nodes = g.nodes
    order = [nodes[i] for i in rng.choice(len(nodes), size=budget, replace=False)]
    return lcc_auc(g, order)


# TSP


@dataclass(frozen=True)
class TspConfig:
    population_size: int = 20
    generations: int = 20
    crossover_prob: float = 0.2
    mutation_prob: float = 0.1
    rng_seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if not (0.0 <= self.crossover_prob <= 1.0 and 0.0 <= self.mutation_prob <= 1.0):
            raise ValueError("probabilities must lie in [0, 1]")


@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]
    length: float

    @property
    def fitness(self) -> float:
        return -self.length

    @property
    def key(self) -> tuple[int, ...]:
        return canonical_tour(self.order)


@dataclass
class TspReport:
    best: Tour
    trace: list[tuple[int, float, float]]
    repairs: int = 0
    fallbacks: int = 0


def canonical_tour(tour: Sequence[int]) -> tuple[int, ...]:
    """Rotation and direction independent representative of a closed tour."""
    t = list(tour)
    i = t.index(min(t))
    fwd = t[i:] + t[:i]
    back = [fwd[0]] + fwd[1:][::-1]
    return tuple(min(fwd, back))


def repair_tour(proposal: Sequence[int], coords: Mapping[int, tuple[float, float]]) -> list[int]:
    """Drop duplicates and unknown cities, then nearest-insert the missing ones."""
    seen: set[int] = set()
    tour = []
    for v in proposal:
        if v in coords and v not in seen:
            seen.add(v)
            tour.append(v)
    d = lambda a, b: math.dist(coords[a], coords[b])
    for v in sorted(c for c in coords if c not in seen):
        if len(tour) < 2:
            tour.append(v)
            continue
        best_pos, best_cost = 0, math.inf
        for i in range(len(tour)):
            a, b = tour[i], tour[(i + 1) % len(tour)]
            cost = d(a, v) + d(v, b) - d(a, b)
            if cost < best_cost - 1e-12:
                best_pos, best_cost = i + 1, cost
        tour.insert(best_pos, v)
    return tour


def order_crossover(a: Sequence[int], b: Sequence[int], rng: np.random.Generator) -> list[int]:
    n = len(a)
    i, j = sorted(rng.choice(n + 1, size=2, replace=False))
    child: list[int | None] = [None] * n
    child[i:j] = a[i:j]
    taken = set(a[i:j])
    fill = [v for v in list(b[j:]) + list(b[:j]) if v not in taken]
    slots = [(j + t) % n for t in range(n) if child[(j + t) % n] is None]
    for pos, v in zip(slots, fill):
        child[pos] = v
    return child


def reverse_segment(t: Sequence[int], rng: np.random.Generator) -> list[int]:
    n = len(t)
    i, j = sorted(rng.choice(n, size=2, replace=False))
    t = list(t)
    t[i : j + 1] = t[i : j + 1][::-1]
    return t


def run_tsp(
    coords: Mapping[int, tuple[float, float]],
    cfg: TspConfig = TspConfig(),
    op=None,
    spec: RenderSpec | None = None,
) -> TspReport:
    """Elitist generational GA over tours. With ``op`` set, crossover and
    mutation are proposed from renderings at the city coordinates and
    repaired into permutations; otherwise order crossover and segment
    reversal are used."""
    coords = dict(coords)
    if len(coords) < 4:
        raise ValueError("TSP needs at least four cities")
    cities = sorted(coords)
    spec = (spec or RenderSpec()).with_mode(Mode.INIT)
    canvas = Graph.from_edges([], cities)
    report = TspReport(None, [])  # type: ignore[arg-type]

    def make(order) -> Tour:
        return Tour(tuple(order), tsp_tour_length(coords, order))

    def view(t: Tour):
        edges = list(zip(t.order, t.order[1:] + t.order[:1]))
        return render(canvas, coords, spec, (), None, edges)

    def proposed(raw) -> list[int]:
        fixed = repair_tour(raw, coords)
        if list(raw) != fixed:
            report.repairs += 1
        return fixed

    def rank(t: Tour):
        return (t.length, t.key)

    rng0 = slot_rng(cfg.rng_seed, 0, 0)
    pop = [make([cities[i] for i in rng0.permutation(len(cities))]) for _ in range(cfg.population_size)]

    def record(gen):
        lengths = np.array([t.length for t in pop])
        report.trace.append((gen, float(lengths.min()), float(lengths.mean())))

    record(0)
    for gen in range(1, cfg.generations + 1):
        children = [min(pop, key=rank)]
        for slot in range(1, cfg.population_size):
            rng = slot_rng(cfg.rng_seed, gen, slot)
            picks = []
            for _ in range(2):
                i, j = rng.choice(len(pop), size=2, replace=False)
                picks.append(min(pop[i], pop[j], key=rank))
            a, b = picks
            child = list(a.order)
            if rng.random() < cfg.crossover_prob:
                if op is None:
                    child = order_crossover(a.order, b.order, rng)
                else:
                    try:
                        child = proposed(op.propose_tsp_crossover(view(a), view(b), a.order, b.order))
                    except OperatorError:
                        report.fallbacks += 1
                        child = order_crossover(a.order, b.order, rng)
            if rng.random() < cfg.mutation_prob:
                if op is None:
                    child = reverse_segment(child, rng)
                else:
                    try:
                        child = proposed(op.propose_tsp_mutation(view(make(child)), child))
                    except OperatorError:
                        report.fallbacks += 1
                        child = reverse_segment(child, rng)
            children.append(make(child))
        pop = children
        record(gen)
    report.best = min(pop, key=rank)
    return report
