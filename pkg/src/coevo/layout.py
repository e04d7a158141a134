"""Seeded force-directed layouts: Kamada-Kawai, Fruchterman-Reingold and a
GraphOpt-style annealed spring embedder. All are pure functions of
(graph, kind, iterations, seed)."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .graph import Graph, connected_components

Positions = dict[int, tuple[float, float]]


class Layout(str, Enum):
    KK = "kk"
    FR = "fr"
    GRAPHOPT = "graphopt"


DEFAULT_ITERATIONS = {Layout.KK: 500, Layout.FR: 500, Layout.GRAPHOPT: 800}

# GraphOpt force constants (node charge, spring constant and rest length, node mass,
# per-step movement cap, initial perturbation temperature)
GRAPHOPT_PARAMS = {"charge": 0.02, "spring": 1.0, "spring_length": 0.15, "mass": 10.0, "max_move": 0.05, "temperature": 0.05}


@dataclass(frozen=True)
class LayoutKind:
    kind: Layout = Layout.KK
    iterations: int | None = None
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", Layout(self.kind))
        if self.iterations is None:
            object.__setattr__(self, "iterations", DEFAULT_ITERATIONS[self.kind])
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")

    @property
    def label(self) -> str:
        return {Layout.KK: "KK", Layout.FR: "FR", Layout.GRAPHOPT: "GraphOpt"}[self.kind]


def _initial(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).random((n, 2))


def _as_positions(g: Graph, X: np.ndarray) -> Positions:
    return {v: (float(X[i, 0]), float(X[i, 1])) for i, v in enumerate(g.nodes)}


def graph_distances(g: Graph) -> np.ndarray:
    return shortest_path(g.adjacency_matrix, unweighted=True, directed=False)


def kk_stress(X: np.ndarray, D: np.ndarray) -> float:
    iu = np.triu_indices(len(X), 1)
    diff = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=-1)[iu]
    d = D[iu]
    return float(((diff - d) ** 2 / d ** 2).sum())


def layout_kk(g: Graph, cfg: LayoutKind | None = None, stress_trace: list | None = None) -> Positions:
    """Kamada-Kawai energy (stress weighted by d^-2) minimized by majorization.

    Each majorization step cannot increase the energy; target edge length is 1.
    """
    cfg = cfg or LayoutKind(Layout.KK)
    n = len(g)
    if n == 0:
        return {}
    if len(connected_components(g)) != 1:
        raise ValueError("layout_kk requires a connected graph")
    if n == 1:
        return {g.nodes[0]: (0.0, 0.0)}
    D = graph_distances(g)
    W = np.zeros_like(D)
    off = ~np.eye(n, dtype=bool)
    W[off] = D[off] ** -2.0
    V = -W.copy()
    V[np.diag_indices(n)] = W.sum(axis=1)
    Vp = np.linalg.pinv(V)
    X = _initial(n, cfg.rng_seed)
    if stress_trace is not None:
        stress_trace.append(kk_stress(X, D))
    for _ in range(cfg.iterations):
        dist = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dist > 1e-12, W * D / dist, 0.0)
        B = -ratio
        B[np.diag_indices(n)] = 0.0
        B[np.diag_indices(n)] = -B.sum(axis=1)
        X_new = Vp @ (B @ X)
        if stress_trace is not None:
            stress_trace.append(kk_stress(X_new, D))
        if np.abs(X_new - X).max() < 1e-10:
            X = X_new
            break
        X = X_new
    return _as_positions(g, X)


def _edge_index(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    idx = g.index
    edges = g.edges()
    if not edges:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    e = np.array([(idx[u], idx[v]) for u, v in edges])
    return e[:, 0], e[:, 1]


def fr_natural_length(n: int) -> float:
    """Spring length at which FR attraction and repulsion balance (unit area)."""
    return float(np.sqrt(1.0 / max(n, 1)))


def layout_fr(g: Graph, cfg: LayoutKind | None = None) -> Positions:
    """Fruchterman-Reingold with linear cooling and an unbounded frame."""
    cfg = cfg or LayoutKind(Layout.FR)
    n = len(g)
    if n == 0:
        return {}
    X = _initial(n, cfg.rng_seed)
    k = fr_natural_length(n)
    src, dst = _edge_index(g)
    t0 = 0.1
    for it in range(cfg.iterations):
        t = t0 * (1.0 - it / cfg.iterations)
        delta = X[:, None, :] - X[None, :, :]
        dist = np.linalg.norm(delta, axis=-1)
        np.fill_diagonal(dist, 1.0)
        dist = np.maximum(dist, 1e-6)
        disp = ((k * k / dist ** 2)[:, :, None] * delta).sum(axis=1)
        if len(src):
            d_e = X[src] - X[dst]
            l_e = np.maximum(np.linalg.norm(d_e, axis=1), 1e-6)
            pull = (l_e / k)[:, None] * d_e
            np.add.at(disp, src, -pull)
            np.add.at(disp, dst, pull)
        length = np.maximum(np.linalg.norm(disp, axis=1), 1e-12)
        X = X + disp / length[:, None] * np.minimum(length, t)[:, None]
    return _as_positions(g, X)


def layout_graphopt(g: Graph, cfg: LayoutKind | None = None, params: dict | None = None) -> Positions:
    """Coulomb repulsion plus Hooke springs, with annealed random perturbations."""
    cfg = cfg or LayoutKind(Layout.GRAPHOPT)
    prm = {**GRAPHOPT_PARAMS, **(params or {})}
    n = len(g)
    if n == 0:
        return {}
    rng = np.random.default_rng([cfg.rng_seed, 7])
    X = _initial(n, cfg.rng_seed)
    src, dst = _edge_index(g)
    for it in range(cfg.iterations):
        frac = 1.0 - it / cfg.iterations
        delta = X[:, None, :] - X[None, :, :]
        dist = np.linalg.norm(delta, axis=-1)
        np.fill_diagonal(dist, 1.0)
        dist = np.maximum(dist, 1e-3)
        force = ((prm["charge"] / dist ** 3)[:, :, None] * delta).sum(axis=1)
        if len(src):
            d_e = X[dst] - X[src]
            l_e = np.maximum(np.linalg.norm(d_e, axis=1), 1e-6)
            f_e = (prm["spring"] * (l_e - prm["spring_length"]) / l_e)[:, None] * d_e
            np.add.at(force, src, f_e)
            np.add.at(force, dst, -f_e)
        # displacement is force over node mass, capped per step
        force = force / prm["mass"]
        length = np.maximum(np.linalg.norm(force, axis=1), 1e-12)
        step = force / length[:, None] * np.minimum(length, prm["max_move"])[:, None]
        noise = rng.normal(0.0, prm["temperature"] * frac ** 2, size=X.shape)
        X = X + step + noise
    return _as_positions(g, X)


_DISPATCH = {Layout.KK: layout_kk, Layout.FR: layout_fr, Layout.GRAPHOPT: layout_graphopt}


def _normalize(pos: Positions) -> Positions:
    xy = np.array(list(pos.values()))
    lo = xy.min(axis=0)
    span = float((xy.max(axis=0) - lo).max()) or 1.0
    return {v: (float((x - lo[0]) / span), float((y - lo[1]) / span)) for v, (x, y) in pos.items()}


def compute_layout(g: Graph, kind: LayoutKind) -> Positions:
    """Layout any graph; disconnected graphs are laid out per component and
    packed on a grid, largest component first."""
    comps = connected_components(g)
    fn = _DISPATCH[kind.kind]
    if len(comps) <= 1:
        return fn(g, kind)
    cols = int(np.ceil(np.sqrt(len(comps))))
    out: Positions = {}
    for c, comp in enumerate(comps):
        sub = g.subgraph(comp)
        local = _normalize(fn(sub, kind)) if len(comp) > 1 else {comp[0]: (0.5, 0.5)}
        r, q = divmod(c, cols)
        for v, (x, y) in local.items():
            out[v] = (q * 1.2 + 0.1 + 0.8 * x, r * 1.2 + 0.1 + 0.8 * y)
    return out
