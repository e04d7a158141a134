"""Multi-seed comparison experiments built on the task runners.

Each function returns per-configuration lists of final best fitness, one
value per seed, so callers can summarize or test them.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .cooperative import CoopConfig
from .evo import EvoConfig
from .graph import Graph
from .operators import MockOperator
from .sparsify import SparsifiedDomain
from .stats import mean_sd, sem
from .tasks import OperatorConfig, SetTaskConfig, build_domains, run_influence_maximization

SEEDS = tuple(range(1, 11))


@dataclass(frozen=True)
class Comparison:
    finals: dict[str, list[float]]

    def mean(self, label: str) -> float:
        return mean_sd(self.finals[label])[0]

    def sem(self, label: str) -> float:
        return sem(self.finals[label])

    def lines(self) -> list[str]:
        out = []
        for label, vals in self.finals.items():
            m, sd = mean_sd(vals)
            out.append(f"{label:>16}: {m:.4f} ± {sd:.4f} (SEM {sem(vals):.4f}, n={len(vals)})")
        return out


def _domains(g: Graph, domains: Sequence[SparsifiedDomain] | None) -> list[SparsifiedDomain]:
    return list(domains) if domains is not None else build_domains(g, SetTaskConfig())


def coop_vs_single(
    g: Graph,
    seeds: Sequence[int] = SEEDS,
    generations: int = 30,
    domains: Sequence[SparsifiedDomain] | None = None,
) -> Comparison:
    """Vanilla Co-EO against single-domain EO on each sparsification. Each of
    the two cooperative workers gets half the single-domain population."""
    doms = _domains(g, domains)
    finals: dict[str, list[float]] = {d.name: [] for d in doms}
    finals["co"] = []
    for seed in seeds:
        evo = EvoConfig(generations=generations, rng_seed=seed)
        for d in doms:
            cfg = SetTaskConfig(mode="single", evo=evo)
            finals[d.name].append(run_influence_maximization(g, cfg, [d]).fitness)
        cfg = SetTaskConfig(mode="coop", evo=evo)
        finals["co"].append(run_influence_maximization(g, cfg, doms).fitness)
    return Comparison(finals)


def transfer_intervals(
    g: Graph,
    intervals: Sequence[int] = (2, 5),
    seeds: Sequence[int] = SEEDS,
    generations: int = 30,
    domains: Sequence[SparsifiedDomain] | None = None,
) -> Comparison:
    doms = _domains(g, domains)
    finals: dict[str, list[float]] = {f"T={t}": [] for t in intervals}
    for seed in seeds:
        for t in intervals:
            cfg = SetTaskConfig(mode="coop", evo=EvoConfig(generations=generations, rng_seed=seed),
                                coop=CoopConfig(transfer_interval=t))
            finals[f"T={t}"].append(run_influence_maximization(g, cfg, doms).fitness)
    return Comparison(finals)


def ensemble_vs_single_mocks(
    g: Graph,
    seeds: Sequence[int] = SEEDS,
    generations: int = 30,
    noise: float = 0.3,
    domains: Sequence[SparsifiedDomain] | None = None,
) -> Comparison:
    """Three noisy mocks, one per layout, run alone and fused by voting.

    Runs are single-domain on the degree-based sparsification so the only
    difference between configurations is the reproduction operator.
    """
    dom = _domains(g, domains)[0]
    base = OperatorConfig(kind="mock", profile="noisy", noise=noise)
    layouts = base.layouts
    finals: dict[str, list[float]] = {f"single-{l}": [] for l in layouts}
    finals["ensemble"] = []
    for seed in seeds:
        evo = EvoConfig(generations=generations, rng_seed=seed)
        mocks = [MockOperator("noisy", 100 * seed + i, noise) for i in range(len(layouts))]
        for i, l in enumerate(layouts):
            op_cfg = replace(base, layouts=(l,), ensemble=False)
            cfg = SetTaskConfig(mode="single", evo=evo, operator=op_cfg)
            finals[f"single-{l}"].append(run_influence_maximization(g, cfg, [dom], ops=[mocks[i]]).fitness)
        cfg = SetTaskConfig(mode="single", evo=evo, operator=base)
        finals["ensemble"].append(run_influence_maximization(g, cfg, [dom], ops=mocks).fitness)
    return Comparison(finals)
