"""Undirected simple graphs with stable integer node IDs, plus the structural
primitives the sparsifiers, fitness functions and operators rely on."""

from __future__ import annotations

import heapq
import logging
import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)


class EdgeListError(ValueError):
    """Raised when an edge-list file cannot be parsed."""


class Graph:
    """Immutable undirected simple graph.

    Node IDs are the integers given at construction and are never renumbered;
    subgraphs keep the IDs of their parent.
    """


    def __init__(self, adjacency: dict[int, Iterable[int]], self_loops_dropped: int = 0):
        adj: dict[int, tuple[int, ...]] = {}
        for v in sorted(adjacency):
            adj[int(v)] = tuple(sorted({int(u) for u in adjacency[v] if u != v}))
        for v, nbrs in adj.items():
            for u in nbrs:
                if u not in adj or v not in adj[u]:
                    raise ValueError(f"adjacency is not symmetric at edge ({v}, {u})")
        self._adj = adj
        self._edge_count = sum(len(n) for n in adj.values()) // 2
        self.self_loops_dropped = self_loops_dropped

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int]], nodes: Iterable[int] = ()) -> "Graph":
        adj: dict[int, set[int]] = {int(v): set() for v in nodes}
        loops = 0
        for u, v in edges:
            u, v = int(u), int(v)
            adj.setdefault(u, set())
            adj.setdefault(v, set())
            if u == v:
                loops += 1
                continue
            adj[u].add(v)
            adj[v].add(u)
        return cls(adj, self_loops_dropped=loops)

    # basic queries

    @cached_property
    def nodes(self) -> tuple[int, ...]:
        return tuple(self._adj)

    @cached_property
    def node_set(self) -> frozenset[int]:
        return frozenset(self._adj)

    @property
    def edge_count(self) -> int:
        return self._edge_count

    def __len__(self) -> int:
        return len(self._adj)

    def __contains__(self, v: object) -> bool:
        return v in self._adj

    def __iter__(self) -> Iterator[int]:
        return iter(self._adj)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Graph) and self._adj == other._adj

    def __hash__(self) -> int:
        return hash(tuple(self._adj.items()))

    def __repr__(self) -> str:
        return f"Graph(|V|={len(self)}, |E|={self.edge_count})"

    def neighbors(self, v: int) -> tuple[int, ...]:
        try:
            return self._adj[v]
        except KeyError:
            raise KeyError(f"unknown node {v}") from None

    def has_edge(self, u: int, v: int) -> bool:
        return u in self._adj and v in self._neighbor_sets[u]

    @cached_property
    def _neighbor_sets(self) -> dict[int, frozenset[int]]:
        return {v: frozenset(n) for v, n in self._adj.items()}

    def neighbor_set(self, v: int) -> frozenset[int]:
        try:
            return self._neighbor_sets[v]
        except KeyError:
            raise KeyError(f"unknown node {v}") from None

    def edges(self) -> list[tuple[int, int]]:
        """Edges as sorted ``(u, v)`` pairs with ``u < v``."""
        return [(u, v) for u, nbrs in self._adj.items() for v in nbrs if u < v]

    @cached_property
    def index(self) -> dict[int, int]:
        """Node ID -> row position in :attr:`nodes`."""
        return {v: i for i, v in enumerate(self._adj)}

    @cached_property
    def adjacency_matrix(self) -> sp.csr_matrix:
        n = len(self)
        idx = self.index
        rows = [idx[u] for u, nbrs in self._adj.items() for _ in nbrs]
        cols = [idx[v] for nbrs in self._adj.values() for v in nbrs]
        data = np.ones(len(rows), dtype=np.float64)
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n))

    @cached_property
    def degrees(self) -> dict[int, int]:
        return {v: len(n) for v, n in self._adj.items()}

    def subgraph(self, nodes: Iterable[int]) -> "Graph":
        keep = set(nodes)
        missing = keep - self.node_set
        if missing:
            raise KeyError(f"unknown nodes {sorted(missing)[:5]}")
        return Graph({v: [u for u in self._adj[v] if u in keep] for v in keep})

    def without_nodes(self, nodes: Iterable[int]) -> "Graph":
        drop = set(nodes)
        return self.subgraph(v for v in self._adj if v not in drop)


@dataclass(frozen=True)
class CommunityPartition:
    assignments: dict[int, int]
    community_sizes: list[int]
    modularity: float = field(default=0.0)

    def members(self) -> list[list[int]]:
        groups: list[list[int]] = [[] for _ in self.community_sizes]
        for v in sorted(self.assignments):
            groups[self.assignments[v]].append(v)
        return groups


_SPLIT = re.compile(r"[,\s]+")


def load_edge_list(path: str | Path) -> Graph:
    """Read a whitespace- or comma-delimited edge list.

    Lines starting with ``#`` (and blank lines) are skipped. Directed inputs are
    symmetrized, parallel edges collapse, self-loops are dropped and counted in
    ``Graph.self_loops_dropped``.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise EdgeListError(f"cannot read {path}: {exc}") from exc
    edges = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("%"):
            continue
        tokens = [t for t in _SPLIT.split(line) if t]
        if len(tokens) < 2:
            raise EdgeListError(f"{path}:{lineno}: expected two node IDs, got {line!r}")
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise EdgeListError(f"{path}:{lineno}: non-integer token in {line!r}") from None
        if u < 0 or v < 0:
            raise EdgeListError(f"{path}:{lineno}: negative node ID in {line!r}")
        edges.append((u, v))
    g = Graph.from_edges(edges)
    if g.self_loops_dropped:
        logger.warning("%s: dropped %d self-loop(s)", path, g.self_loops_dropped)
    return g


def write_edge_list(g: Graph, path: str | Path) -> None:
    lines = [f"{u} {v}" for u, v in g.edges()]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def degree(g: Graph, v: int) -> int:
    return len(g.neighbors(v))


def one_hop_neighborhood(g: Graph, s: Iterable[int]) -> set[int]:
    """``s`` together with every neighbor of a member of ``s``."""
    out: set[int] = set()
    for v in s:
        out.add(v)
        out.update(g.neighbors(v))
    return out


def connected_components(g: Graph) -> list[list[int]]:
    """Components as sorted node lists, ordered by size desc then smallest ID."""
    seen: set[int] = set()
    comps = []
    for start in g.nodes:
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for u in g.neighbors(v):
                if u not in seen:
                    seen.add(u)
                    comp.append(u)
                    queue.append(u)
        comps.append(sorted(comp))
    comps.sort(key=lambda c: (-len(c), c[0]))
    return comps


def largest_connected_component(g: Graph) -> Graph:
    if len(g) == 0:
        return g
    comps = connected_components(g)
    if len(comps) == 1:
        return g
    return g.subgraph(comps[0])


def is_connected(g: Graph) -> bool:
    return len(g) > 0 and len(connected_components(g)) == 1


def betweenness_centrality(g: Graph, batch_size: int = 256) -> dict[int, float]:
    """Unnormalized shortest-path betweenness (endpoints excluded).

    Brandes' accumulation, run level-synchronously for a batch of sources at a
    time with sparse matrix products. Each unordered pair is counted once.
    """
    n = len(g)
    if n == 0:
        return {}
    A = g.adjacency_matrix
    bc = np.zeros(n)
    for start in range(0, n, batch_size):
        src = np.arange(start, min(start + batch_size, n))
        b = len(src)
        rows = np.arange(b)
        sigma = np.zeros((b, n))
        sigma[rows, src] = 1.0
        visited = np.zeros((b, n), dtype=bool)
        visited[rows, src] = True
        frontier = sigma.copy()
        levels = [visited.copy()]
        while True:
            nxt = np.asarray((A @ frontier.T).T)
            nxt[visited] = 0.0
            mask = nxt > 0
            if not mask.any():
                break
            visited |= mask
            sigma[mask] = nxt[mask]
            frontier = np.where(mask, nxt, 0.0)
            levels.append(mask)
        delta = np.zeros((b, n))
        safe_sigma = np.where(sigma > 0, sigma, 1.0)
        for d in range(len(levels) - 1, 0, -1):
            coef = np.where(levels[d], (1.0 + delta) / safe_sigma, 0.0)
            contrib = np.asarray((A @ coef.T).T)
            delta += np.where(levels[d - 1], sigma * contrib, 0.0)
        delta[rows, src] = 0.0
        bc += delta.sum(axis=0)
    bc /= 2.0
    return {v: float(bc[i]) for i, v in enumerate(g.nodes)}


def modularity(g: Graph, assignments: dict[int, int]) -> float:
    m = g.edge_count
    if m == 0:
        return 0.0
    internal: dict[int, int] = {}
    degree_sum: dict[int, int] = {}
    for v in g.nodes:
        c = assignments[v]
        degree_sum[c] = degree_sum.get(c, 0) + g.degrees[v]
    for u, v in g.edges():
        if assignments[u] == assignments[v]:
            internal[assignments[u]] = internal.get(assignments[u], 0) + 1
    return sum(internal.get(c, 0) / m - (ds / (2.0 * m)) ** 2 for c, ds in degree_sum.items())


# Merge gains are kept as exact integers scaled by (2m)^2:
# gain(i, j) = 2 * (2m * L_ij - D_i * D_j), with L the number of edges between
# communities i and j and D their degree sums. Exact values make tie-breaking
# identical across both implementations below.


def _cnm_sparse(g: Graph) -> tuple[list[tuple[int, int]], int]:
    """Heap of merge gains with lazy invalidation; memory linear in |E|."""
    nodes = g.nodes
    n = len(nodes)
    idx = g.index
    m2 = 2 * g.edge_count
    D = [g.degrees[v] for v in nodes]
    dq: list[dict[int, int]] = [dict() for _ in range(n)]
    heap: list[tuple[int, int, int]] = []
    for u, v in g.edges():
        i, j = sorted((idx[u], idx[v]))
        val = 2 * (m2 - D[i] * D[j])
        dq[i][j] = val
        dq[j][i] = val
        heap.append((-val, i, j))
    heapq.heapify(heap)

    q = -sum(d * d for d in D)
    best_q, best_step = q, 0
    merges: list[tuple[int, int]] = []
    alive = [True] * n
    while heap:
        neg, i, j = heapq.heappop(heap)
        if not (alive[i] and alive[j]) or dq[i].get(j) != -neg:
            continue
        # merge j into i (i < j)
        q -= neg
        merges.append((i, j))
        alive[j] = False
        row_i, row_j = dq[i], dq[j]
        for kk in set(row_i) | set(row_j):
            if kk in (i, j):
                continue
            if kk in row_i and kk in row_j:
                val = row_i[kk] + row_j[kk]
            elif kk in row_j:
                val = row_j[kk] - 2 * D[i] * D[kk]
            else:
                val = row_i[kk] - 2 * D[j] * D[kk]
            row_i[kk] = val
            dq[kk][i] = val
            dq[kk].pop(j, None)
            lo, hi = (i, kk) if i < kk else (kk, i)
            heapq.heappush(heap, (-val, lo, hi))
        row_i.pop(j, None)
        dq[j] = {}
        D[i] += D[j]
        D[j] = 0
        if q > best_q:
            best_q, best_step = q, len(merges)
    return merges, best_step


def _cnm_dense(g: Graph) -> tuple[list[tuple[int, int]], int]:
    """Same merge order as :func:`_cnm_sparse`, on a dense edge-count matrix.

    Each row caches a known prefix (up to two entries) of its partners sorted
    by gain, encoded as ``gain * n + (n - 1 - column)`` so one integer compare
    orders by gain and then by smaller column. A row is rescanned only when
    its cached prefix empties.
    """
    n = len(g)
    m2 = 2 * g.edge_count
    L = g.adjacency_matrix.toarray().astype(np.int64)
    D = L.sum(axis=1)
    NEG = np.iinfo(np.int64).min
    cols_key = (n - 1 - np.arange(n)).astype(np.int64)
    K1 = np.full(n, NEG, dtype=np.int64)
    K2 = np.full(n, NEG, dtype=np.int64)

    def col(key: np.ndarray) -> np.ndarray:
        return n - 1 - (key % n)

    def rescan(rows: np.ndarray) -> None:
        sub = L[rows]
        keys = (2 * (m2 * sub - D[rows, None] * D[None, :])) * n + cols_key[None, :]
        keys[sub <= 0] = NEG
        first = keys.argmax(axis=1)
        r = np.arange(len(rows))
        K1[rows] = keys[r, first]
        keys[r, first] = NEG
        K2[rows] = keys.max(axis=1)

    for start in range(0, n, 256):
        rescan(np.arange(start, min(n, start + 256)))

    q = -int((D * D).sum())
    best_q, best_step = q, 0
    merges: list[tuple[int, int]] = []
    while True:
        r = int(K1.argmax())
        key = int(K1[r])
        if key == NEG:
            break
        c = int(col(np.int64(key)))
        lo, hi = (r, c) if r < c else (c, r)
        q += key // n
        merges.append((lo, hi))
        L[lo] += L[hi]
        L[:, lo] = L[lo]
        L[lo, lo] = 0
        L[hi] = 0
        L[:, hi] = 0
        D[lo] += D[hi]
        D[hi] = 0
        K1[hi] = K2[hi] = NEG

        nb = np.flatnonzero(L[lo] > 0)
        if len(nb):
            kv = (2 * (m2 * L[lo, nb] - D[lo] * D[nb])) * n + cols_key[lo]
            c1, c2 = K1[nb], K2[nb]
            i1, i2 = col(c1), col(c2)
            ok1 = (c1 != NEG) & (i1 != lo) & (i1 != hi)
            ok2 = (c1 != NEG) & (c2 != NEG) & (i2 != lo) & (i2 != hi)
            p1 = np.where(ok1, c1, np.where(ok2, c2, NEG))
            p2 = np.where(ok1 & ok2, c2, NEG)
            top = kv > p1
            K1[nb] = np.where(top, kv, p1)
            K2[nb] = np.where(top, p1, np.where((p2 != NEG) & (kv > p2), kv, p2))
            empty = nb[p1 == NEG]
            if len(empty):
                rescan(empty)
        rescan(np.array([lo]))
        if q > best_q:
            best_q, best_step = q, len(merges)
    return merges, best_step


DENSE_CNM_LIMIT = 6000


def detect_communities(g: Graph) -> CommunityPartition:
    """Greedy modularity agglomeration (Clauset-Newman-Moore).

    Merges are applied until one community remains; the partition at the
    first modularity peak of that dendrogram is returned. Ties in the merge
    gain are broken by the smaller community index pair, and the merged
    community keeps the smaller index.
    """
    if len(g) == 0:
        raise ValueError("cannot detect communities in an empty graph")
    if not is_connected(g):
        raise ValueError("detect_communities expects a connected graph (pass the LCC)")
    nodes = g.nodes
    n = len(nodes)
    if g.edge_count == 0:
        return CommunityPartition({nodes[0]: 0}, [1], 0.0)
    m2 = 2 * g.edge_count
    if n <= DENSE_CNM_LIMIT and 2 * m2 * m2 * n < 2**62:
        merges, best_step = _cnm_dense(g)
    else:
        merges, best_step = _cnm_sparse(g)

    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in merges[:best_step]:
        parent[find(j)] = find(i)
    roots: dict[int, int] = {}
    assignments: dict[int, int] = {}
    for pos, v in enumerate(nodes):
        r = find(pos)
        if r not in roots:
            roots[r] = len(roots)
        assignments[v] = roots[r]
    sizes = [0] * len(roots)
    for c in assignments.values():
        sizes[c] += 1
    return CommunityPartition(assignments, sizes, modularity(g, assignments))
