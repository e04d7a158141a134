"""Fidelity checks on operator proposals, repair rules, and validity-rate
bookkeeping.

Check IDs: ``TI1``-``TI3`` (initialization), ``TC1``-``TC3`` (crossover) and
``TM1``-``TM3`` (mutation). ``TI3`` is advisory; every other check is hard.
"""

from __future__ import annotations

import csv
import threading
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .sparsify import SparsifiedDomain

CHECK_IDS = ("TI1", "TI2", "TI3", "TC1", "TC2", "TC3", "TM1", "TM2", "TM3")
CHECK_NAMES = {
    "TI1": "Valid Node Check",
    "TI2": "Initialization Size Check",
    "TI3": "Low Degree Node Check",
    "TC1": "Crossover Size Check",
    "TC2": "Duplicate Node Check",
    "TC3": "Parent Node Source Check",
    "TM1": "Node Presence Check",
    "TM2": "Mutation Valid Node Check",
    "TM3": "Mutation Repetitive Node Check",
}
ADVISORY = frozenset({"TI3"})
LOW_DEGREE_PERCENTILE = 10.0


@dataclass(frozen=True)
class CheckReport:
    check_id: str
    passed: bool
    offending_nodes: frozenset[int] = frozenset()
    repaired: bool = False

    @property
    def hard(self) -> bool:
        return self.check_id not in ADVISORY


def _report(check_id: str, offending: Iterable[int]) -> CheckReport:
    offending = frozenset(offending)
    return CheckReport(check_id, not offending, offending)


def _duplicates(seq: Sequence[int]) -> set[int]:
    seen, dup = set(), set()
    for v in seq:
        (dup if v in seen else seen).add(v)
    return dup


def low_degree_threshold(domain: SparsifiedDomain) -> float:
    degs = list(domain.subgraph.degrees.values())
    return float(np.percentile(degs, LOW_DEGREE_PERCENTILE)) if degs else 0.0


def check_init(candidate: Sequence[int], domain: SparsifiedDomain, k: int) -> list[CheckReport]:
    candidate = list(candidate)
    size_ok = len(set(candidate)) == k
    threshold = low_degree_threshold(domain)
    degs = domain.subgraph.degrees
    return [
        _report("TI1", (v for v in candidate if v not in domain)),
        CheckReport("TI2", size_ok, frozenset() if size_ok else frozenset(candidate)),
        _report("TI3", (v for v in candidate if v in domain and degs[v] < threshold)),
    ]


def check_crossover(child: Sequence[int], parent_a: Iterable[int], parent_b: Iterable[int], k: int) -> list[CheckReport]:
    child = list(child)
    parents = set(parent_a) | set(parent_b)
    size_ok = len(child) == k
    return [
        CheckReport("TC1", size_ok, frozenset() if size_ok else frozenset(child)),
        _report("TC2", _duplicates(child)),
        _report("TC3", (v for v in child if v not in parents)),
    ]


def check_mutation(original: Iterable[int], removal: int, addition: int, domain: SparsifiedDomain) -> list[CheckReport]:
    original = frozenset(original)
    return [
        _report("TM1", [] if removal in original else [removal]),
        _report("TM2", [] if addition in domain else [addition]),
        _report("TM3", [addition] if addition in original else []),
    ]


def hard_checks_pass(reports: Iterable[CheckReport]) -> bool:
    return all(r.passed for r in reports if r.hard)


# repair


@dataclass(frozen=True)
class InitContext:
    domain: SparsifiedDomain


@dataclass(frozen=True)
class CrossoverContext:
    parent_a: frozenset[int]
    parent_b: frozenset[int]
    domain: SparsifiedDomain | None = None


@dataclass(frozen=True)
class MutationContext:
    original: frozenset[int]
    domain: SparsifiedDomain


def _dedup(seq: Iterable[int]) -> list[int]:
    seen: set[int] = set()
    out = []
    for v in seq:
        if v not in seen:
            seen.add(v)
            out.append(v)
    return out


def repair_init(candidate: Sequence[int], domain: SparsifiedDomain, k: int) -> frozenset[int]:
    """Drop out-of-domain and repeated nodes, truncate, then fill by betweenness."""
    if len(domain) < k:
        raise ValueError(f"domain {domain.name!r} has {len(domain)} nodes, fewer than k={k}")
    kept = [v for v in _dedup(candidate) if v in domain][:k]
    present = set(kept)
    fill = [v for v in domain.betweenness_rank if v not in present][: k - len(kept)]
    return frozenset(kept + fill)


def repair_crossover(
    child: Sequence[int], parent_a: Iterable[int], parent_b: Iterable[int], k: int, rng: np.random.Generator
) -> frozenset[int]:
    """Keep inherited nodes in proposal order, top up uniformly from the parents' union."""
    parents = sorted(set(parent_a) | set(parent_b))
    if len(parents) < k:
        raise ValueError(f"parents' union has {len(parents)} nodes, fewer than k={k}")
    pset = set(parents)
    kept = [v for v in _dedup(child) if v in pset][:k]
    present = set(kept)
    pool = [v for v in parents if v not in present]
    need = k - len(kept)
    if need:
        picks = rng.choice(len(pool), size=need, replace=False)
        kept += [pool[i] for i in sorted(picks)]
    return frozenset(kept)


def repair_mutation(original: Iterable[int], removal: int, addition: int, domain: SparsifiedDomain) -> tuple[int, int]:
    """Replace an invalid removal by the least central member and an invalid
    addition by the most central non-member (domain betweenness, ties by ID)."""
    original = frozenset(original)
    if len(domain) <= len(original):
        raise ValueError("no non-member nodes available for mutation")
    if removal not in original:
        bc = domain.betweenness
        removal = min(original, key=lambda v: (bc.get(v, 0.0), v))
    if addition not in domain or addition in original:
        addition = next(v for v in domain.betweenness_rank if v not in original)
    return removal, addition


def repair(candidate: Sequence[int], context, k: int, rng: np.random.Generator | None = None) -> frozenset[int]:
    """Context-dispatched repair. For mutation contexts ``candidate`` is the
    proposed post-mutation set, repaired by betweenness fill like init."""
    if isinstance(context, CrossoverContext):
        return repair_crossover(candidate, context.parent_a, context.parent_b, k, rng or np.random.default_rng(0))
    if isinstance(context, (InitContext, MutationContext)):
        return repair_init(candidate, context.domain, k)
    raise TypeError(f"unknown repair context {context!r}")


# event log and statistics


@dataclass(frozen=True)
class ValidationEvent:
    phase: str
    check_id: str
    passed: bool
    network: str = ""
    sparsification: str = ""
    layout: str = ""
    kind: str = "check"


@dataclass(frozen=True)
class MutationRecord:
    removed: int
    added: int
    removed_degree: int
    added_degree: int
    network: str = ""
    sparsification: str = ""
    layout: str = ""


@dataclass
class ValidationLog:
    """Append-only record of raw (pre-repair) check outcomes and repairs."""

    events: list[ValidationEvent] = field(default_factory=list)
    mutations: list[MutationRecord] = field(default_factory=list)
    network: str = ""
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def record(self, phase: str, reports: Iterable[CheckReport], sparsification: str = "", layout: str = "") -> None:
        with self._lock:
            for r in reports:
                self.events.append(ValidationEvent(phase, r.check_id, r.passed, self.network, sparsification, layout))

    def record_repair(self, phase: str, sparsification: str = "", layout: str = "") -> None:
        with self._lock:
            self.events.append(ValidationEvent(phase, "repair", True, self.network, sparsification, layout, "repair"))

    def record_mutation(self, rec: MutationRecord) -> None:
        with self._lock:
            self.mutations.append(rec)

    def extend(self, other: "ValidationLog") -> None:
        with self._lock:
            self.events.extend(other.events)
            self.mutations.extend(other.mutations)


Cell = tuple[str, str, str]


def validity_stats(events: Iterable[ValidationEvent]) -> dict[Cell, dict[str, float]]:
    """Pass rate per check per (network, sparsification, layout) cell.

    Checks with no events in a cell are absent from that cell's dict.
    """
    counts: dict[Cell, dict[str, list[int]]] = defaultdict(lambda: defaultdict(lambda: [0, 0]))
    for e in events:
        if e.kind != "check":
            continue
        c = counts[(e.network, e.sparsification, e.layout)][e.check_id]
        c[0] += int(e.passed)
        c[1] += 1
    return {cell: {cid: p / n for cid, (p, n) in checks.items()} for cell, checks in counts.items()}


def validity_counts(events: Iterable[ValidationEvent]) -> dict[Cell, dict[str, tuple[int, int]]]:
    counts: dict[Cell, dict[str, list[int]]] = defaultdict(lambda: defaultdict(lambda: [0, 0]))
    for e in events:
        if e.kind == "check":
            c = counts[(e.network, e.sparsification, e.layout)][e.check_id]
            c[0] += int(e.passed)
            c[1] += 1
    return {cell: {cid: (p, n) for cid, (p, n) in checks.items()} for cell, checks in counts.items()}


def write_validity_csv(stats: dict[Cell, dict[str, float]], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["network", "sparsification", "layout", *CHECK_IDS])
        for cell in sorted(stats):
            row = stats[cell]
            w.writerow([*cell, *("" if cid not in row else f"{row[cid]:.6f}" for cid in CHECK_IDS)])
