"""Filtered networks extracted from a distance matrix.

All constructions are deterministic: weight ties are broken by the
lexicographic order of the node index pair (i, j), i < j.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .correlation import DistanceMatrix
from .errors import MethodError, SizeError

METHODS = ("MST", "MaST", "AG", "TMFG")
_METHOD_ALIASES = {m.lower(): m for m in METHODS}


def canonical_method(name: str) -> str:
    try:
        return _METHOD_ALIASES[name.strip().lower()]
    except KeyError:
        raise MethodError(f"unknown filtering method {name!r}; expected one of {METHODS}") from None


@dataclass(frozen=True)
class FilteredNetwork:
    """Undirected weighted graph on ``names`` with edges (i, j, d_ij), i < j."""

    names: tuple[str, ...]
    edges: tuple[tuple[int, int, float], ...]
    method: str

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        edges = tuple(sorted((min(i, j), max(i, j), float(w)) for i, j, w in self.edges))
        n = len(self.names)
        for i, j, _ in edges:
            if i == j or not (0 <= i < n and 0 <= j < n):
                raise MethodError(f"invalid edge ({i}, {j}) for {n} nodes")
        if len({(i, j) for i, j, _ in edges}) != len(edges):
            raise MethodError("duplicate edge")
        object.__setattr__(self, "edges", edges)

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))

    def weights(self) -> np.ndarray:
        return np.array([w for _, _, w in self.edges], dtype=float)

    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset((i, j) for i, j, _ in self.edges)

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j, _ in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        for nbrs in adj:
            nbrs.sort()
        return adj

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def is_connected(self) -> bool:
        return all(h >= 0 for h in hop_distances(self.adjacency(), 0))

    def is_spanning_tree(self) -> bool:
        return self.n_edges == self.n - 1 and self.is_connected()

    def to_records(self, window_end: str = "") -> list[dict]:
        return [
            {"source": self.names[i], "target": self.names[j], "distance": w,
             "method": self.method, "window_end": window_end}
            for i, j, w in self.edges
        ]

    def to_json(self, window_end: str = "") -> str:
        edges = [{k: v for k, v in rec.items() if k not in ("method", "window_end")}
                 for rec in self.to_records(window_end)]
        return json.dumps({"method": self.method, "window_end": window_end, "edges": edges},
                          indent=2)


def hop_distances(adj: list[list[int]], source: int) -> list[int]:
    """BFS hop counts from ``source``; -1 marks unreachable nodes."""
    dist = [-1] * len(adj)
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


class UnionFind:
    """Disjoint sets with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


def _pairs(d: np.ndarray) -> list[tuple[int, int, float]]:
    n = d.shape[0]
    return [(i, j, float(d[i, j])) for i in range(n) for j in range(i + 1, n)]


def _require(dm: DistanceMatrix, minimum: int) -> None:
    if dm.n < minimum:
        raise SizeError(f"need at least {minimum} nodes, got {dm.n}")


def _kruskal(dm: DistanceMatrix, order: Iterable[tuple[int, int, float]], method: str) -> FilteredNetwork:
    uf = UnionFind(dm.n)
    chosen = []
    for i, j, w in order:
        if uf.union(i, j):
            chosen.append((i, j, w))
            if len(chosen) == dm.n - 1:
                break
    return FilteredNetwork(dm.names, tuple(chosen), method)


def mst(dm: DistanceMatrix) -> FilteredNetwork:
    """Minimum spanning tree by Kruskal on (weight, i, j) order."""
    _require(dm, 2)
    order = sorted(_pairs(dm.d), key=lambda e: (e[2], e[0], e[1]))
    return _kruskal(dm, order, "MST")


def mast(dm: DistanceMatrix) -> FilteredNetwork:
    """Maximum spanning tree by Kruskal on (-weight, i, j) order."""
    _require(dm, 2)
    order = sorted(_pairs(dm.d), key=lambda e: (-e[2], e[0], e[1]))
    return _kruskal(dm, order, "MaST")


def asset_graph(dm: DistanceMatrix) -> FilteredNetwork:
    """The n - 1 globally smallest distances; connectivity is not enforced."""
    _require(dm, 2)
    order = sorted(_pairs(dm.d), key=lambda e: (e[2], e[0], e[1]))
    return FilteredNetwork(dm.names, tuple(order[: dm.n - 1]), "AG")


def tmfg_seed(score: np.ndarray) -> tuple[int, int, int, int]:
    """4-clique of maximum total score; first in combination order on ties."""
    n = score.shape[0]
    quads = np.array(list(itertools.combinations(range(n), 4)))
    a, b, c, e = quads.T
    totals = (score[a, b] + score[a, c] + score[a, e]
              + score[b, c] + score[b, e] + score[c, e])
    return tuple(int(v) for v in quads[int(np.argmax(totals))])


def tmfg(dm: DistanceMatrix) -> FilteredNetwork:
    """Triangulated maximally filtered graph with similarity score 2 - d.

    Starting from the best-scoring 4-clique, repeatedly insert the
    (vertex, triangular face) pair with the largest sum of the three new
    edge scores. Ties go to the smallest vertex, then the smallest face.
    """
    _require(dm, 4)
    d = dm.d
    score = 2.0 - d
    seed = tmfg_seed(score)
    edges = set(itertools.combinations(seed, 2))
    faces = [tuple(f) for f in itertools.combinations(seed, 3)]
    remaining = [v for v in range(dm.n) if v not in seed]
    while remaining:
        best = None
        for v in remaining:
            for f in faces:
                a, b, c = f
                gain = score[v, a] + score[v, b] + score[v, c]
                key = (-gain, v, f)
                if best is None or key < best:
                    best = key
        _, v, f = best
        a, b, c = f
        faces.remove(f)
        faces.extend([tuple(sorted((a, b, v))), tuple(sorted((a, c, v))), tuple(sorted((b, c, v)))])
        faces.sort()
        edges.update((min(v, u), max(v, u)) for u in f)
        remaining.remove(v)
    return FilteredNetwork(dm.names, tuple((i, j, float(d[i, j])) for i, j in sorted(edges)), "TMFG")


FILTERS = {"MST": mst, "MaST": mast, "AG": asset_graph, "TMFG": tmfg}


def build(dm: DistanceMatrix, method: str) -> FilteredNetwork:
    return FILTERS[canonical_method(method)](dm)


def ultrametric(tree: FilteredNetwork) -> DistanceMatrix:
    """Maximum edge weight on the unique tree path between every pair."""
    if tree.method not in ("MST", "MaST"):
        raise MethodError(f"ultrametric needs a spanning tree, got a {tree.method} network")
    if not tree.is_spanning_tree():
        raise MethodError("input network is not a spanning tree")
    n = tree.n
    nbrs: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for i, j, w in tree.edges:
        nbrs[i].append((j, w))
        nbrs[j].append((i, w))
    u = np.zeros((n, n))
    for s in range(n):
        seen = [False] * n
        seen[s] = True
        stack = [(s, 0.0)]
        while stack:
            v, path_max = stack.pop()
            u[s, v] = path_max
            for w, weight in nbrs[v]:
                if not seen[w]:
                    seen[w] = True
                    stack.append((w, max(path_max, weight)))
    return DistanceMatrix(tree.names, u)
