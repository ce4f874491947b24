"""Slow, obviously-correct reference computations used only by the tests."""

from __future__ import annotations

import itertools
import math

import numpy as np


def brute_strict_maxima(y):
    return [i for i in range(1, len(y) - 1) if y[i] > y[i - 1] and y[i] > y[i + 1]]


def brute_prominence(y, i):
    """Height above the higher of the two lowest points reachable before a strictly taller sample."""
    h = y[i]
    bases = []
    for step in (-1, 1):
        j, low = i, h
        while 0 <= j + step < len(y) and y[j + step] <= h:
            j += step
            low = min(low, y[j])
        bases.append(low)
    return h - max(bases)


def brute_peaks(t, y, min_distance_s, min_prominence):
    cands = brute_strict_maxima(y)
    kept = []
    for i in sorted(cands, key=lambda i: (-y[i], i)):
        if all(abs(t[i] - t[j]) >= min_distance_s for j in kept):
            kept.append(i)
    return sorted(i for i in kept if brute_prominence(y, i) >= min_prominence)


def floyd_warshall(n, edges):
    inf = math.inf
    d = [[0 if i == j else inf for j in range(n)] for i in range(n)]
    for a, b in edges:
        d[a][b] = d[b][a] = 1
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return d


def _efficiency(nodes, edges):
    nodes = list(nodes)
    n = len(nodes)
    if n < 2:
        return 0.0
    idx = {v: k for k, v in enumerate(nodes)}
    d = floyd_warshall(n, [(idx[a], idx[b]) for a, b in edges])
    total = sum(1.0 / d[i][j] for i in range(n) for j in range(n) if i != j and d[i][j] != math.inf)
    return total / (n * (n - 1))


def brute_graph_features(n, edges):
    """The eight features by enumeration; returns a dict keyed like FEATURE_NAMES."""
    edges = {tuple(sorted(e)) for e in edges}
    adj = {v: set() for v in range(n)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    m = len(edges)
    d = floyd_warshall(n, edges)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    triangles = sum(1 for a, b, c in itertools.combinations(range(n), 3)
                    if b in adj[a] and c in adj[a] and c in adj[b])
    wedges = sum(len(adj[v]) * (len(adj[v]) - 1) / 2 for v in range(n))
    clust, loc = [], []
    for v in range(n):
        k = len(adj[v])
        if k < 2:
            clust.append(0.0)
            loc.append(0.0)
            continue
        links = [(a, b) for a, b in itertools.combinations(sorted(adj[v]), 2) if b in adj[a]]
        clust.append(len(links) / (k * (k - 1) / 2))
        loc.append(_efficiency(sorted(adj[v]), links))
    return {
        "avg_degree": 2 * m / n,
        "avg_clustering": sum(clust) / n,
        "density": 2 * m / (n * (n - 1)),
        "transitivity": 3 * triangles / wedges if wedges else 0.0,
        "diameter": max(d[i][j] for i, j in pairs),
        "local_eff": sum(loc) / n,
        "global_eff": sum(1.0 / d[i][j] for i, j in pairs) / len(pairs),
        "avg_shortest_path": sum(d[i][j] for i, j in pairs) / len(pairs),
    }


def brute_vg_edges(t, y):
    """Line-of-sight test written with exact rationals (inputs must be exactly representable)."""
    from fractions import Fraction
    t = [Fraction(v) for v in t]
    y = [Fraction(v) for v in y]
    out = set()
    for a in range(len(t)):
        for b in range(a + 1, len(t)):
            if all(y[c] < y[b] + (y[a] - y[b]) * (t[b] - t[c]) / (t[b] - t[a]) for c in range(a + 1, b)):
                out.add((a, b))
    return out


def direct_dft_power(frame, n_fft):
    x = np.zeros(n_fft)
    x[: len(frame)] = frame
    k = np.arange(n_fft // 2 + 1)[:, None]
    n = np.arange(n_fft)[None, :]
    X = (x * np.exp(-2j * np.pi * k * n / n_fft)).sum(axis=1)
    return np.abs(X) ** 2 / n_fft


def mann_whitney_auc(truth, scores):
    pos = [s for s, y in zip(scores, truth) if y == 1]
    neg = [s for s, y in zip(scores, truth) if y == 0]
    wins = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return wins / (len(pos) * len(neg))
