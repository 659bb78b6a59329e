"""Rooted topologies: oriented MSTs and the market/sector-anchored spanning tree.

Nodes are active-set ordinals ``0..n_A-1``. When a dummy market root is
present it is the extra node ``n_A``.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass

import numpy as np

from .data import ActiveSet, ReturnsPanel
from .dependence import (
    SpanningTree,
    build_mst,
    distance_matrix,
    pearson_correlation,
    sanitize_correlation,
)
from .errors import FixedIndexNotActive, NoSectorEtfs


@dataclass(frozen=True)
class RootedTopology:
    root: int
    parent: tuple[int, ...]
    children: tuple[tuple[int, ...], ...]
    depth: tuple[int, ...]
    is_dummy_root: bool = False

    @classmethod
    def from_parents(cls, parent, root: int, is_dummy_root: bool = False) -> RootedTopology:
        """Build from a parent array (``parent[root] == -1``), validating shape."""
        parent = tuple(int(p) for p in parent)
        n = len(parent)
        if not 0 <= root < n or parent[root] != -1:
            raise ValueError("root must be a node with parent -1")
        children: list[list[int]] = [[] for _ in range(n)]
        for v, p in enumerate(parent):
            if v == root:
                continue
            if not 0 <= p < n or p == v:
                raise ValueError(f"invalid parent {p} for node {v}")
            children[p].append(v)
        depth = [-1] * n
        depth[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in children[u]:
                depth[v] = depth[u] + 1
                queue.append(v)
        if min(depth) < 0:
            raise ValueError("parent map has a cycle or unreachable nodes")
        return cls(root, parent, tuple(tuple(c) for c in children), tuple(depth), is_dummy_root)

    @property
    def n_nodes(self) -> int:
        return len(self.parent)

    @property
    def n_assets(self) -> int:
        """Number of real (weight-carrying) nodes."""
        return self.n_nodes - 1 if self.is_dummy_root else self.n_nodes

    @property
    def branching(self) -> np.ndarray:
        return np.array([len(c) for c in self.children], dtype=int)

    @property
    def max_branching(self) -> int:
        return int(self.branching.max(initial=0))

    @property
    def max_depth(self) -> int:
        return max(self.depth)

    def level(self, ell: int) -> list[int]:
        return [v for v, d in enumerate(self.depth) if d == ell]

    def order(self) -> list[int]:
        """Nodes in breadth-first order from the root (parents before children)."""
        out = [self.root]
        for u in out:
            out.extend(self.children[u])
        return out

    def subtree(self, u: int) -> list[int]:
        out = [u]
        for v in out:
            out.extend(self.children[v])
        return out

    def path_to(self, v: int) -> list[int]:
        """Ancestors of ``v`` from the root down, excluding ``v``."""
        path = []
        while self.parent[v] != -1:
            v = self.parent[v]
            path.append(v)
        return path[::-1]

    def edges(self) -> list[tuple[int, int]]:
        return [(p, v) for v, p in enumerate(self.parent) if p != -1]

    def digest(self) -> str:
        """Short stable hash of the parent map, for reproducibility headers."""
        payload = f"{self.root}|{int(self.is_dummy_root)}|" + ",".join(map(str, self.parent))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class SubtreeMass:
    masses: np.ndarray
    exponent: float


def select_root(tree: SpanningTree, signals, mode: str = "hub", index: int | None = None) -> int:
    """Pick the root node; every tie goes to the lowest ordinal.

    ``signals`` are restricted to the tree's nodes. In ``"fixed"`` mode
    ``index`` is the node ordinal.
    """
    if tree.n_nodes < 1:
        raise ValueError("cannot root an empty tree")
    if mode == "hub":
        return int(np.argmax(tree.degrees()))
    if mode == "maxmag":
        s = np.abs(np.asarray(signals, dtype=float))
        return int(np.argmax(s))
    if mode == "fixed":
        if index is None or not 0 <= index < tree.n_nodes:
            raise FixedIndexNotActive(f"fixed root {index} is not an active node")
        return int(index)
    raise ValueError(f"unknown root mode {mode!r}")


def root_tree(tree: SpanningTree, root: int) -> RootedTopology:
    """Orient ``tree`` away from ``root``."""
    adj = tree.adjacency()
    parent = [-2] * tree.n_nodes
    parent[root] = -1
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if parent[v] == -2:
                parent[v] = u
                queue.append(v)
    if -2 in parent:
        raise ValueError("edge set does not span the nodes")
    return RootedTopology.from_parents(parent, root)


def anchor_market_sector(tree: SpanningTree, sector_nodes) -> RootedTopology:
    """Hang the real-asset MST under a dummy market root via the sector ETFs.

    The dummy root is node ``n`` with edges to every sector node. Those edges
    are claimed first, then a depth-first search over the MST runs from each
    sector node in ascending order (neighbours ascending), which extracts a
    spanning tree from the generally cyclic augmented graph with every
    sector node at depth one.
    """
    sectors = sorted({int(x) for x in sector_nodes})
    if not sectors:
        raise NoSectorEtfs("no sector ETFs among the active assets")
    n = tree.n_nodes
    m = n
    adj = tree.adjacency()
    parent = [-2] * (n + 1)
    parent[m] = -1
    for x in sectors:
        parent[x] = m
    for x in sectors:
        stack = [(x, iter(adj[x]))]
        while stack:
            u, nbrs = stack[-1]
            for v in nbrs:
                if parent[v] == -2:
                    parent[v] = u
                    stack.append((v, iter(adj[v])))
                    break
            else:
                stack.pop()
    if -2 in parent:
        raise ValueError("real-asset tree is not connected")
    return RootedTopology.from_parents(parent, m, is_dummy_root=True)


def fallback_augmented_mst(panel: ReturnsPanel, active: ActiveSet) -> RootedTopology:
    """Root at a zero-return dummy asset appended to the active universe.

    The dummy's correlations are NaN and sanitize to 0, so it sits at
    distance sqrt(1/2) from every asset.
    """
    returns = panel.returns[active.indices]
    augmented = np.vstack([returns, np.zeros((1, returns.shape[1]))])
    corr = sanitize_correlation(pearson_correlation(augmented))
    tree = build_mst(distance_matrix(corr))
    topo = root_tree(tree, len(augmented) - 1)
    return RootedTopology(topo.root, topo.parent, topo.children, topo.depth, is_dummy_root=True)


def subtree_mass(topo: RootedTopology, signals, p: float = 1.0) -> SubtreeMass:
    """Bottom-up sums of |s_i|**p; the dummy root contributes nothing."""
    s = np.abs(np.asarray(signals, dtype=float)) ** p
    if s.shape != (topo.n_assets,):
        raise ValueError(f"expected {topo.n_assets} signals, got {s.shape}")
    masses = np.zeros(topo.n_nodes)
    masses[: topo.n_assets] = s
    for u in reversed(topo.order()):
        for v in topo.children[u]:
            masses[u] += masses[v]
    return SubtreeMass(masses, float(p))
