"""Sanitized correlation, Mantegna distance and deterministic minimum spanning trees."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .data import ActiveSet, ReturnsPanel
from .errors import UniverseTooLarge

BRUTE_FORCE_MAX_NODES = 8


@dataclass(frozen=True)
class SpanningTree:
    """Undirected spanning tree on nodes ``0..n_nodes-1``.

    ``edges`` holds ``(i, j, weight)`` with ``i < j``, in the order they were
    accepted.
    """

    n_nodes: int
    edges: tuple[tuple[int, int, float], ...]

    @property
    def total_weight(self) -> float:
        # fsum is order independent, so equal edge sets give equal totals
        return math.fsum(w for _, _, w in self.edges)

    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset((i, j) for i, j, _ in self.edges)

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for i, j, _ in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        for nbrs in adj:
            nbrs.sort()
        return adj

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=int)
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def sanitize_correlation(corr) -> np.ndarray:
    """Clip to [-1, 1], replace NaN by 0, symmetrize, force a unit diagonal."""
    c = np.array(corr, dtype=float)
    c = np.clip(c, -1.0, 1.0)
    c = np.where(np.isfinite(c), c, 0.0)
    c = 0.5 * (c + c.T)
    np.fill_diagonal(c, 1.0)
    return c


def pearson_correlation(returns) -> np.ndarray:
    r = np.atleast_2d(np.asarray(returns, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.atleast_2d(np.corrcoef(r))


def correlation_matrix(panel: ReturnsPanel, active: ActiveSet | None = None) -> np.ndarray:
    """Sanitized Pearson correlation of the active rows over the full history."""
    returns = panel.returns if active is None else panel.returns[active.indices]
    return sanitize_correlation(pearson_correlation(returns))


def distance_matrix(corr) -> np.ndarray:
    c = np.asarray(corr, dtype=float)
    # clip guards against 1 - C going a hair negative
    d = np.sqrt(np.clip((1.0 - c) / 2.0, 0.0, 1.0))
    np.fill_diagonal(d, 0.0)
    return d


def build_mst(dist) -> SpanningTree:
    """Kruskal's algorithm; ties broken by (weight, min index, max index)."""
    d = np.asarray(dist, dtype=float)
    n = d.shape[0]
    if n <= 1:
        return SpanningTree(n, ())
    iu, ju = np.triu_indices(n, k=1)
    w = d[iu, ju]
    order = np.lexsort((ju, iu, w))
    uf = UnionFind(n)
    edges = []
    for e in order:
        i, j = int(iu[e]), int(ju[e])
        if uf.union(i, j):
            edges.append((i, j, float(w[e])))
            if len(edges) == n - 1:
                break
    return SpanningTree(n, tuple(edges))


def prufer_decode(seq, n: int) -> list[tuple[int, int]]:
    """Edges of the labeled tree on ``n`` nodes encoded by a Pruefer sequence."""
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    edges = []
    for x in seq:
        leaf = next(i for i in range(n) if degree[i] == 1)
        edges.append((min(leaf, x), max(leaf, x)))
        degree[leaf] -= 1
        degree[x] -= 1
    u, v = (i for i in range(n) if degree[i] == 1)
    edges.append((u, v))
    return edges


@lru_cache(maxsize=None)
def _all_trees(n: int) -> np.ndarray:
    """Every labeled spanning tree on n nodes, shape (n**(n-2), n-1, 2)."""
    trees = [prufer_decode(seq, n) for seq in product(range(n), repeat=n - 2)]
    out = np.array(trees, dtype=np.intp)
    out.setflags(write=False)
    return out


def brute_force_mst(dist) -> SpanningTree:
    """Exhaustive minimum over all n**(n-2) labeled spanning trees (test oracle)."""
    d = np.asarray(dist, dtype=float)
    n = d.shape[0]
    if n > BRUTE_FORCE_MAX_NODES:
        raise UniverseTooLarge(f"brute force limited to {BRUTE_FORCE_MAX_NODES} nodes, got {n}")
    if n <= 1:
        return SpanningTree(n, ())
    trees = _all_trees(n)
    weights = d[trees[..., 0], trees[..., 1]].sum(axis=1)
    near = np.flatnonzero(weights <= weights.min() + 1e-12)
    exact = [math.fsum(d[trees[k, :, 0], trees[k, :, 1]]) for k in near]
    best = int(near[int(np.argmin(exact))])
    edges = sorted((int(i), int(j)) for i, j in trees[best])
    return SpanningTree(n, tuple((i, j, float(d[i, j])) for i, j in edges))


def is_spanning_tree(n_nodes: int, edges) -> bool:
    pairs = [(e[0], e[1]) for e in edges]
    if len(pairs) != max(n_nodes - 1, 0):
        return False
    uf = UnionFind(n_nodes)
    return all(uf.union(i, j) for i, j in pairs)
