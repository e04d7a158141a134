"""Master-worker cooperative optimization across sparsified domains.

Workers run the evolutionary loop in lockstep. Every ``transfer_interval``
generations each worker, in index order, sends its best solution to the
elite pool, and then each worker in index order asks for a foreign elite
and injects it if it beats its weakest member.
"""

from __future__ import annotations

import logging
from concurrent.futures import Executor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .evo import (
    Candidate,
    EvoConfig,
    EvoRun,
    FitnessFn,
    GenerationRecord,
    Population,
    Reproduction,
    VanillaReproduction,
    _rank_key,
    evaluate,
)
from .sparsify import Fill, SparsifiedDomain, proj_with_fill

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EliteEntry:
    solution: frozenset[int]
    fitness: float
    generation: int
    source_domain: str

    @property
    def key(self) -> tuple[int, ...]:
        return tuple(sorted(self.solution))


@dataclass(frozen=True)
class ElitePool:
    entries: tuple[EliteEntry, ...] = ()
    max_age: int = 5
    capacity: int = 10

    def __post_init__(self):
        if self.max_age < 0 or self.capacity < 1:
            raise ValueError("max_age must be >= 0 and capacity >= 1")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def current_generation(self) -> int | None:
        return max((e.generation for e in self.entries), default=None)


def prune_by_age(pool: ElitePool) -> ElitePool:
    g_now = pool.current_generation
    if g_now is None:
        return pool
    return replace(pool, entries=tuple(e for e in pool.entries if g_now - e.generation <= pool.max_age))


def pool_add(pool: ElitePool, entry: EliteEntry) -> ElitePool:
    """Insert after any entries of equal fitness, prune by age, then truncate."""
    entries = list(pool.entries)
    pos = len(entries)
    for i, e in enumerate(entries):
        if e.fitness < entry.fitness:
            pos = i
            break
    entries.insert(pos, entry)
    pruned = prune_by_age(replace(pool, entries=tuple(entries)))
    return replace(pruned, entries=pruned.entries[: pool.capacity])


def request_elite(pool: ElitePool, requester_domain: str) -> EliteEntry | None:
    foreign = [e for e in pool.entries if e.source_domain != requester_domain]
    if not foreign:
        return None
    return min(foreign, key=lambda e: (-e.fitness, -e.generation, e.key))


def inject_elite(
    pop: Population,
    domain: SparsifiedDomain,
    entry: EliteEntry,
    k: int,
    fill: Fill | str,
    rng: np.random.Generator,
    fitness_fn: FitnessFn,
) -> tuple[Population, Candidate | None]:
    """Map the entry into the domain and swap it in for the weakest member if it
    is strictly better. Returns the new population and the injected candidate
    (None if rejected)."""
    nodes = proj_with_fill(domain, entry.solution, k, fill, rng)
    cand = evaluate(domain, nodes, fitness_fn)
    worst = pop.worst_index()
    if cand.fitness > pop.members[worst].fitness:
        members = list(pop.members)
        members[worst] = cand
        return Population(members, pop.generation), cand
    return pop, None


@dataclass(frozen=True)
class CoopConfig:
    transfer_interval: int = 2
    max_age: int = 5
    capacity: int = 10
    per_worker_population: int | None = None
    fill: Fill = Fill.HEURISTIC

    def __post_init__(self):
        object.__setattr__(self, "fill", Fill(self.fill))
        if self.transfer_interval < 1:
            raise ValueError("transfer_interval must be >= 1")
        ElitePool((), self.max_age, self.capacity)


@dataclass(frozen=True)
class PoolEvent:
    generation: int
    action: str  # "send", "inject", "reject", "none"
    domain: str
    fitness: float | None
    pool_size: int


@dataclass
class CoopReport:
    best: Candidate | None
    worker_bests: list[Candidate]
    worker_traces: list[list[GenerationRecord]]
    pool_history: list[PoolEvent] = field(default_factory=list)
    pool: ElitePool | None = None
    domains: list[str] = field(default_factory=list)
    worker_configs: list[EvoConfig] = field(default_factory=list)
    completed_generations: int = 0
    error: BaseException | None = None


class CooperativeRunError(RuntimeError):
    def __init__(self, message: str, report: CoopReport):
        super().__init__(message)
        self.report = report


ReproFactory = Callable[[SparsifiedDomain, int], Reproduction]


def worker_configs(
    evo_cfg: EvoConfig, coop_cfg: CoopConfig, n_workers: int, seeds: Sequence[int] | None = None
) -> list[EvoConfig]:
    size = coop_cfg.per_worker_population or max(2, evo_cfg.population_size // n_workers)
    if seeds is None:
        seeds = [evo_cfg.rng_seed + i for i in range(n_workers)]
    if len(seeds) != n_workers:
        raise ValueError(f"expected {n_workers} worker seeds, got {len(seeds)}")
    return [replace(evo_cfg, population_size=size, rng_seed=int(s)) for s in seeds]


def _map(executor, fn, items):
    return [fn(x) for x in items] if executor is None else list(executor.map(fn, items))


def run_cooperative(
    domains: Sequence[SparsifiedDomain],
    evo_cfg: EvoConfig,
    coop_cfg: CoopConfig,
    fitness_fn: FitnessFn,
    repro_factory: ReproFactory | None = None,
    init: str = "random",
    seeds: Sequence[int] | None = None,
    executor: Executor | None = None,
) -> CoopReport:
    """Run one worker per domain with periodic elite exchange.

    ``repro_factory(domain, worker_index)`` builds each worker's reproduction
    scheme (vanilla when omitted). ``executor`` parallelizes workers between
    barriers; barrier actions always happen in worker order.
    """
    if len(domains) < 2:
        raise ValueError("cooperative optimization needs at least two domains")
    names = [d.name for d in domains]
    if len(set(names)) != len(names):
        raise ValueError(f"domain names must be distinct, got {names}")
    cfgs = worker_configs(evo_cfg, coop_cfg, len(domains), seeds)
    runs = [
        EvoRun(d, c, repro_factory(d, i) if repro_factory else VanillaReproduction(d), fitness_fn, init)
        for i, (d, c) in enumerate(zip(domains, cfgs))
    ]
    pool = ElitePool((), coop_cfg.max_age, coop_cfg.capacity)
    report = CoopReport(None, [], [], [], pool, names, cfgs)

    def finish(gen: int) -> CoopReport:
        report.completed_generations = gen
        report.pool = pool
        done = [r for r in runs if r.population is not None]
        report.worker_bests = [r.best for r in done]
        report.worker_traces = [list(r.trace) for r in done]
        report.best = min(report.worker_bests, key=_rank_key) if report.worker_bests else None
        return report

    gen = 0
    try:
        _map(executor, lambda r: r.initialize(), runs)
        for gen in range(1, evo_cfg.generations + 1):
            _map(executor, lambda r: r.step(), runs)
            if gen % coop_cfg.transfer_interval:
                continue
            for r in runs:
                best = r.best
                pool = pool_add(pool, EliteEntry(best.nodes, best.fitness, gen, r.domain.name))
                report.pool_history.append(PoolEvent(gen, "send", r.domain.name, best.fitness, len(pool)))
            for i, r in enumerate(runs):
                entry = request_elite(pool, r.domain.name)
                if entry is None:
                    report.pool_history.append(PoolEvent(gen, "none", r.domain.name, None, len(pool)))
                    continue
                rng = np.random.default_rng([r.cfg.rng_seed, gen, 1_000_003])
                new_pop, cand = inject_elite(
                    r.population, r.domain, entry, r.cfg.k, coop_cfg.fill, rng, fitness_fn
                )
                if cand is not None:
                    r.replace_population(new_pop)
                    report.pool_history.append(PoolEvent(gen, "inject", r.domain.name, cand.fitness, len(pool)))
                else:
                    report.pool_history.append(PoolEvent(gen, "reject", r.domain.name, entry.fitness, len(pool)))
    except Exception as exc:
        report.error = exc
        finish(max(gen - 1, 0))
        raise CooperativeRunError(f"cooperative run aborted at generation {gen}: {exc}", report) from exc
    return finish(evo_cfg.generations)
