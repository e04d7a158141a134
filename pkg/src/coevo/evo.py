"""Single-domain generational evolutionary loop with binary tournaments and
keep-one elitism. Reproduction is pluggable; fitness is always evaluated on
the original graph after projecting out of the domain."""

from __future__ import annotations

import logging
from concurrent.futures import Executor
from dataclasses import dataclass, field, replace
from typing import Callable, Protocol

import numpy as np

from .sparsify import SparsifiedDomain, project_to_original

logger = logging.getLogger(__name__)

FitnessFn = Callable[[frozenset], float]


class OperatorError(RuntimeError):
    """A reproduction operator could not produce a usable proposal."""


@dataclass(frozen=True)
class EvoConfig:
    population_size: int = 20
    crossover_prob: float = 0.2
    mutation_prob: float = 0.1
    generations: int = 30
    k: int = 10
    rng_seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.crossover_prob <= 1.0 and 0.0 <= self.mutation_prob <= 1.0):
            raise ValueError("crossover_prob and mutation_prob must lie in [0, 1]")
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")


@dataclass(frozen=True)
class Candidate:
    nodes: frozenset[int]
    fitness: float | None = None
    home_domain: str | None = None

    @property
    def key(self) -> tuple[int, ...]:
        return tuple(sorted(self.nodes))

    def __len__(self) -> int:
        return len(self.nodes)


@dataclass
class Population:
    members: list[Candidate]
    generation: int = 0

    def __len__(self) -> int:
        return len(self.members)

    def best(self) -> Candidate:
        return min(self.members, key=_rank_key)

    def worst_index(self) -> int:
        return max(range(len(self.members)), key=lambda i: _rank_key(self.members[i]))

    def fitness_values(self) -> np.ndarray:
        return np.array([m.fitness for m in self.members], dtype=float)


def _rank_key(c: Candidate) -> tuple:
    # ascending sort puts the fittest first; ties go to the smaller node tuple
    return (-c.fitness, c.key)


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best: float
    mean: float
    std: float


class Reproduction(Protocol):
    """What the loop needs from a variation scheme, in domain coordinates."""

    def initialize(self, n: int, k: int, rng: np.random.Generator) -> list[frozenset[int]]: ...

    def crossover(self, a: Candidate, b: Candidate, rng: np.random.Generator) -> frozenset[int]: ...

    def mutate(self, c: Candidate, rng: np.random.Generator) -> frozenset[int]: ...


class CachedFitness:
    """Memoizes a set-fitness function; safe to share between workers."""

    def __init__(self, fn: FitnessFn):
        self.fn = fn
        self._cache: dict[frozenset, float] = {}
        self.evaluations = 0

    def __call__(self, nodes: frozenset) -> float:
        nodes = frozenset(nodes)
        try:
            return self._cache[nodes]
        except KeyError:
            self.evaluations += 1
            value = self._cache[nodes] = float(self.fn(nodes))
            return value


def slot_rng(seed: int, generation: int, slot: int) -> np.random.Generator:
    """Independent stream per (seed, generation, offspring slot)."""
    return np.random.default_rng([seed, generation, slot])


def random_candidate_nodes(domain: SparsifiedDomain, k: int, rng: np.random.Generator) -> frozenset[int]:
    nodes = domain.nodes
    return frozenset(nodes[i] for i in rng.choice(len(nodes), size=k, replace=False))


def evaluate(domain: SparsifiedDomain, nodes: frozenset[int], fitness_fn: FitnessFn) -> Candidate:
    return Candidate(frozenset(nodes), fitness_fn(project_to_original(domain, nodes)), domain.name)


def init_random(domain: SparsifiedDomain, cfg: EvoConfig, fitness_fn: FitnessFn | None = None) -> Population:
    if len(domain) < cfg.k:
        raise ValueError(f"domain {domain.name!r} has {len(domain)} nodes, fewer than k={cfg.k}")
    rng = slot_rng(cfg.rng_seed, 0, 0)
    members = []
    for _ in range(cfg.population_size):
        nodes = random_candidate_nodes(domain, cfg.k, rng)
        if fitness_fn is None:
            members.append(Candidate(nodes, None, domain.name))
        else:
            members.append(evaluate(domain, nodes, fitness_fn))
    return Population(members, 0)


def init_via_operator(
    domain: SparsifiedDomain,
    cfg: EvoConfig,
    repro: Reproduction,
    fitness_fn: FitnessFn,
) -> Population:
    """Initial population from the operator; random init if the operator fails."""
    if len(domain) < cfg.k:
        raise ValueError(f"domain {domain.name!r} has {len(domain)} nodes, fewer than k={cfg.k}")
    rng = slot_rng(cfg.rng_seed, 0, 0)
    try:
        proposals = repro.initialize(cfg.population_size, cfg.k, rng)
    except OperatorError as exc:
        logger.warning("operator initialization failed on %s (%s); using random init", domain.name, exc)
        return init_random(domain, cfg, fitness_fn)
    if len(proposals) != cfg.population_size or any(len(p) != cfg.k for p in proposals):
        logger.warning("operator initialization returned malformed population; using random init")
        return init_random(domain, cfg, fitness_fn)
    return Population([evaluate(domain, p, fitness_fn) for p in proposals], 0)


class VanillaReproduction:
    """Probability-based baseline: uniform set crossover and swap mutation."""

    def __init__(self, domain: SparsifiedDomain):
        self.domain = domain

    def initialize(self, n, k, rng):
        return [random_candidate_nodes(self.domain, k, rng) for _ in range(n)]

    def crossover(self, a, b, rng):
        return vanilla_crossover(a, b, rng).nodes

    def mutate(self, c, rng):
        return vanilla_mutation(c, self.domain, rng).nodes


def vanilla_crossover(a: Candidate, b: Candidate, rng: np.random.Generator) -> Candidate:
    """Each child slot is drawn from a uniformly chosen parent, without duplicates."""
    if len(a.nodes) != len(b.nodes):
        raise ValueError("parents must have the same size")
    if a.home_domain is not None and b.home_domain is not None and a.home_domain != b.home_domain:
        raise ValueError("parents come from different domains")
    k = len(a.nodes)
    pools = [sorted(a.nodes), sorted(b.nodes)]
    child: list[int] = []
    chosen: set[int] = set()
    for _ in range(k):
        side = int(rng.integers(2))
        options = [v for v in pools[side] if v not in chosen]
        if not options:
            options = [v for v in pools[1 - side] if v not in chosen]
        v = options[int(rng.integers(len(options)))]
        child.append(v)
        chosen.add(v)
    return Candidate(frozenset(child), None, a.home_domain)


def vanilla_mutation(c: Candidate, domain: SparsifiedDomain, rng: np.random.Generator) -> Candidate:
    """Swap one uniformly chosen member for a uniformly chosen non-member."""
    outside = [v for v in domain.nodes if v not in c.nodes]
    if not outside:
        raise ValueError("no non-member nodes available for mutation")
    members = sorted(c.nodes)
    out = members[int(rng.integers(len(members)))]
    new = outside[int(rng.integers(len(outside)))]
    return Candidate((c.nodes - {out}) | {new}, None, c.home_domain)


def tournament(pop: Population, rng: np.random.Generator) -> Candidate:
    i, j = rng.choice(len(pop), size=2, replace=False)
    return min(pop.members[i], pop.members[j], key=_rank_key)


def select_parents(pop: Population, rng: np.random.Generator) -> tuple[Candidate, Candidate]:
    if len(pop) < 2:
        raise ValueError("population must contain at least two candidates")
    return tournament(pop, rng), tournament(pop, rng)


def _offspring(pop, domain, cfg, repro, fitness_fn, slot) -> Candidate:
    rng = slot_rng(cfg.rng_seed, pop.generation + 1, slot)
    a, b = select_parents(pop, rng)
    if rng.random() < cfg.crossover_prob:
        child = Candidate(frozenset(repro.crossover(a, b, rng)), None, domain.name)
    else:
        child = a
    if rng.random() < cfg.mutation_prob:
        child = Candidate(frozenset(repro.mutate(child, rng)), None, domain.name)
    if child.fitness is None:
        child = evaluate(domain, child.nodes, fitness_fn)
    return child


def evolve_generation(
    pop: Population,
    domain: SparsifiedDomain,
    cfg: EvoConfig,
    repro: Reproduction,
    fitness_fn: FitnessFn,
    executor: Executor | None = None,
) -> Population:
    """One generational step: the elite survives, every other slot is offspring."""
    slots = range(1, len(pop))
    if executor is None:
        children = [_offspring(pop, domain, cfg, repro, fitness_fn, s) for s in slots]
    else:
        children = list(executor.map(lambda s: _offspring(pop, domain, cfg, repro, fitness_fn, s), slots))
    return Population([pop.best()] + children, pop.generation + 1)


def trace_record(pop: Population) -> GenerationRecord:
    f = pop.fitness_values()
    return GenerationRecord(pop.generation, float(f.max()), float(f.mean()), float(f.std()))


@dataclass
class EvoRun:
    """A steppable single-domain run; the cooperative coordinator drives several."""

    domain: SparsifiedDomain
    cfg: EvoConfig
    repro: Reproduction
    fitness_fn: FitnessFn
    init: str = "random"
    executor: Executor | None = None
    population: Population | None = None
    trace: list[GenerationRecord] = field(default_factory=list)

    def initialize(self) -> Population:
        if self.init == "operator":
            self.population = init_via_operator(self.domain, self.cfg, self.repro, self.fitness_fn)
        else:
            self.population = init_random(self.domain, self.cfg, self.fitness_fn)
        self.trace = [trace_record(self.population)]
        return self.population

    def step(self) -> Population:
        if self.population is None:
            self.initialize()
        self.population = evolve_generation(
            self.population, self.domain, self.cfg, self.repro, self.fitness_fn, self.executor
        )
        self.trace.append(trace_record(self.population))
        return self.population

    def replace_population(self, pop: Population) -> None:
        self.population = pop
        self.trace[-1] = trace_record(pop)

    @property
    def best(self) -> Candidate:
        return self.population.best()


@dataclass
class EvoResult:
    best: Candidate
    trace: list[GenerationRecord]
    population: Population


def run_evolution(
    domain: SparsifiedDomain,
    cfg: EvoConfig,
    repro: Reproduction | None = None,
    fitness_fn: FitnessFn | None = None,
    init: str = "random",
    executor: Executor | None = None,
) -> EvoResult:
    if fitness_fn is None:
        raise ValueError("fitness_fn is required")
    run = EvoRun(domain, cfg, repro or VanillaReproduction(domain), fitness_fn, init, executor)
    run.initialize()
    for _ in range(cfg.generations):
        run.step()
    return EvoResult(run.best, run.trace, run.population)


def with_seed(cfg: EvoConfig, seed: int) -> EvoConfig:
    return replace(cfg, rng_seed=seed)

