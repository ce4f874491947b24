"""The eight topology features computed per visibility graph.

Distances are unweighted hop counts.  Nodes with fewer than two neighbors
contribute 0 to the clustering and local-efficiency averages.  Local
efficiency follows Latora & Marchiori: the mean, over nodes, of the global
efficiency of the subgraph induced by the node's neighbors.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass, fields

import numpy as np
from numba import njit

from .errors import Disconnected, TooSmall
from .visibility_graph import VisibilityGraph

FEATURE_NAMES = (
    "avg_degree",
    "avg_clustering",
    "density",
    "transitivity",
    "diameter",
    "local_eff",
    "global_eff",
    "avg_shortest_path",
)


@dataclass(frozen=True)
class GraphFeatureVector:
    average_degree: float
    average_clustering: float
    density: float
    transitivity: float
    diameter: float
    local_efficiency: float
    global_efficiency: float
    average_shortest_path: float

    def as_array(self) -> np.ndarray:
        """Values in ``FEATURE_NAMES`` (CSV column) order."""
        return np.array(astuple(self), dtype=np.float64)

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, f.name) for name, f in zip(FEATURE_NAMES, fields(self))}


@njit(cache=True)
def _bfs(indptr, indices, src, dist, queue):
    n = indptr.size - 1
    for i in range(n):
        dist[i] = -1
    dist[src] = 0
    head = 0
    tail = 1
    queue[0] = src
    while head < tail:
        u = queue[head]
        head += 1
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue[tail] = v
                tail += 1
    return tail


@njit(cache=True)
def _apsp_matrix(indptr, indices):
    n = indptr.size - 1
    out = np.empty((n, n), dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for s in range(n):
        _bfs(indptr, indices, s, out[s], queue)
    return out


@njit(cache=True)
def _distance_summary(indptr, indices):
    """Sum of d, sum of 1/d and max d over ordered pairs; -1 if disconnected."""
    n = indptr.size - 1
    dist = np.empty(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    total = 0
    inv_total = 0.0
    longest = 0
    for s in range(n):
        reached = _bfs(indptr, indices, s, dist, queue)
        if reached < n:
            return -1, 0.0, -1
        for v in range(n):
            d = dist[v]
            if d > 0:
                total += d
                inv_total += 1.0 / d
                if d > longest:
                    longest = d
    return total, inv_total, longest


@njit(cache=True)
def _node_triangles(indptr, indices):
    """Per node, the number of edges among its neighbors (sorted-list merge)."""
    n = indptr.size - 1
    tri = np.zeros(n, dtype=np.int64)
    for v in range(n):
        a0 = indptr[v]
        a1 = indptr[v + 1]
        count = 0
        for k in range(a0, a1):
            u = indices[k]
            i = a0
            j = indptr[u]
            j1 = indptr[u + 1]
            while i < a1 and j < j1:
                x = indices[i]
                w = indices[j]
                if x == w:
                    count += 1
                    i += 1
                    j += 1
                elif x < w:
                    i += 1
                else:
                    j += 1
        tri[v] = count // 2
    return tri


@njit(cache=True)
def _local_efficiencies(indptr, indices):
    n = indptr.size - 1
    out = np.zeros(n)
    mark = np.full(n, -1, dtype=np.int64)
    dist = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for v in range(n):
        k = indptr[v + 1] - indptr[v]
        if k < 2:
            continue
        for p in range(indptr[v], indptr[v + 1]):
            mark[indices[p]] = v
        acc = 0.0
        for p in range(indptr[v], indptr[v + 1]):
            src = indices[p]
            dist[src] = 0
            queue[0] = src
            head = 0
            tail = 1
            while head < tail:
                u = queue[head]
                head += 1
                for q in range(indptr[u], indptr[u + 1]):
                    w = indices[q]
                    if mark[w] == v and dist[w] < 0:
                        dist[w] = dist[u] + 1
                        queue[tail] = w
                        tail += 1
            for r in range(1, tail):
                acc += 1.0 / dist[queue[r]]
            for r in range(tail):
                dist[queue[r]] = -1
        out[v] = acc / (k * (k - 1))
    return out


def all_pairs_shortest_paths(g: VisibilityGraph) -> np.ndarray:
    """Hop-count distance matrix by BFS from every node."""
    d = _apsp_matrix(g.indptr, g.indices)
    if g.n_nodes and np.any(d < 0):
        raise Disconnected("graph is not connected")
    return d


def clustering_coefficients(g: VisibilityGraph) -> np.ndarray:
    deg = g.degrees()
    tri = _node_triangles(g.indptr, g.indices)
    pairs = deg * (deg - 1) / 2.0
    return np.divide(tri, pairs, out=np.zeros(g.n_nodes), where=pairs > 0)


def extract_graph_features(g: VisibilityGraph) -> GraphFeatureVector:
    n = g.n_nodes
    if n < 2:
        raise TooSmall(f"graph features need >= 2 nodes, got {n}")
    m = g.n_edges
    deg = g.degrees()

    tri = _node_triangles(g.indptr, g.indices)
    pairs = deg * (deg - 1) / 2.0
    clustering = np.divide(tri, pairs, out=np.zeros(n), where=pairs > 0)
    wedges = pairs.sum()
    transitivity = tri.sum() / wedges if wedges > 0 else 0.0

    total, inv_total, longest = _distance_summary(g.indptr, g.indices)
    if longest < 0:
        raise Disconnected("graph is not connected")
    ordered_pairs = n * (n - 1)

    return GraphFeatureVector(
        average_degree=2.0 * m / n,
        average_clustering=float(clustering.mean()),
        density=2.0 * m / ordered_pairs,
        transitivity=float(transitivity),
        diameter=float(longest),
        local_efficiency=float(_local_efficiencies(g.indptr, g.indices).mean()),
        global_efficiency=inv_total / ordered_pairs,
        average_shortest_path=total / ordered_pairs,
    )
