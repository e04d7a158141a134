"""Benchmark network registry and seeded synthetic stand-ins.

Edge lists are looked up under ``$COEVO_DATA_DIR`` (then ``./data``) as
``<name>.txt``, ``<name>.edges`` or ``<name>.csv``. Nothing is downloaded.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .graph import Graph, load_edge_list

# reference sizes (|V|, |E|)
DATASETS: dict[str, tuple[int, int]] = {
    "usair": (332, 2126),
    "netscience": (379, 914),
    "polblogs": (1222, 16717),
    "facebook": (4039, 88234),
    "wikivote": (7066, 100736),
    "rutgers89": (24568, 784596),
    "msu24": (32361, 1118767),
    "texas84": (36365, 1590651),
}
FACEBOOK_SCALE = ("usair", "netscience", "polblogs", "facebook")
SUFFIXES = (".txt", ".edges", ".csv")


class DatasetUnavailable(FileNotFoundError):
    pass


def data_dirs() -> list[Path]:
    dirs = []
    if os.environ.get("COEVO_DATA_DIR"):
        dirs.append(Path(os.environ["COEVO_DATA_DIR"]))
    dirs.append(Path.cwd() / "data")
    return dirs


def locate(name: str) -> Path | None:
    for d in data_dirs():
        for suffix in SUFFIXES:
            p = d / f"{name.lower()}{suffix}"
            if p.is_file():
                return p
    return None


def available(name: str) -> bool:
    return locate(name) is not None


def load_dataset(name: str) -> Graph:
    path = locate(name)
    if path is None:
        searched = ", ".join(str(d) for d in data_dirs())
        raise DatasetUnavailable(f"edge list for {name!r} not found (searched {searched})")
    return load_edge_list(path)


def synthetic_like(n_nodes: int, n_edges: int, seed: int = 0) -> Graph:
    """Connected preferential-attachment graph topped up with degree-biased
    random edges to exactly ``n_edges``."""
    if n_nodes < 3 or not n_nodes - 1 <= n_edges <= n_nodes * (n_nodes - 1) // 2:
        raise ValueError(f"cannot build a connected simple graph with |V|={n_nodes}, |E|={n_edges}")
    rng = np.random.default_rng(seed)
    m = max(1, min(n_edges // n_nodes, n_nodes - 1))
    edges: set[tuple[int, int]] = set()
    targets: list[int] = []
    for v in range(1, n_nodes):
        k = min(m, v)
        pool = targets if v > m else list(range(v))
        chosen: set[int] = set()
        while len(chosen) < k:
            chosen.add(int(pool[int(rng.integers(len(pool)))]))
        for u in chosen:
            edges.add((u, v))
            targets += [u, v]
    # m <= |E|/|V| keeps the attachment phase at or below the edge target
    assert len(edges) <= n_edges
    while len(edges) < n_edges:
        u = int(targets[int(rng.integers(len(targets)))])
        v = int(rng.integers(n_nodes))
        if u != v:
            e = (min(u, v), max(u, v))
            if e not in edges:
                edges.add(e)
                targets += [u, v]
    return Graph.from_edges(sorted(edges), range(n_nodes))


def surrogate(name: str, seed: int = 0) -> Graph:
    """Synthetic graph with the reference |V| and |E| of a named network."""
    n, e = DATASETS[name.lower()]
    return synthetic_like(n, e, seed)
