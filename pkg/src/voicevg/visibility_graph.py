"""Natural visibility graphs.

Two points (t_a, y_a) and (t_b, y_b) are linked when every point strictly
between them lies strictly below the straight line joining them.  Collinear
intermediates block visibility, so a linear series maps to a path graph.

Two builders are provided:

* :func:`build_vg_naive` tests the line-of-sight condition for every pair
  against every intermediate point.  It is the correctness reference.
* :func:`build_vg_fast` splits the series at its (leftmost) maximum, sweeps
  outward from the split keeping the steepest slope seen so far, and
  recurses on both sides.  Nothing can see across the maximum, so the two
  halves are independent.  Average cost is O(n log n); monotone input
  degrades to O(n^2).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import signal_core as sc
from .errors import NoPeaks, TooShort

_GROW = 2


@dataclass(frozen=True)
class VisibilityGraph:
    """Undirected simple graph over the points of a series, in time order.

    ``edges`` is an (E, 2) array with ``i < j`` per row, sorted
    lexicographically.  ``indptr``/``indices`` hold the CSR adjacency with
    ascending neighbor lists.
    """

    n_nodes: int
    edges: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_edges(cls, n_nodes: int, edges) -> "VisibilityGraph":
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size:
            if np.any(e[:, 0] == e[:, 1]):
                raise ValueError("self-loops are not allowed")
            if e.min() < 0 or e.max() >= n_nodes:
                raise ValueError("edge endpoint out of range")
            e = np.sort(e, axis=1)
            e = e[np.lexsort((e[:, 1], e[:, 0]))]
            dup = np.zeros(len(e), dtype=bool)
            dup[1:] = np.all(e[1:] == e[:-1], axis=1)
            e = np.ascontiguousarray(e[~dup])
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((dst, src))
        indptr = np.zeros(n_nodes + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n_nodes), out=indptr[1:])
        for arr in (e, indptr):
            arr.setflags(write=False)
        indices = np.ascontiguousarray(dst[order])
        indices.setflags(write=False)
        return cls(int(n_nodes), e, indptr, indices)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(a), int(b)) for a, b in self.edges}

    def to_json(self) -> str:
        payload = {"n_nodes": self.n_nodes, "edges": self.edges.tolist()}
        return json.dumps(payload, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "VisibilityGraph":
        payload = json.loads(text)
        return cls.from_edges(payload["n_nodes"], payload["edges"])


def _check_series(series: sc.TimeSeries) -> tuple[np.ndarray, np.ndarray]:
    # TimeSeries already guarantees strictly increasing, finite timestamps.
    if len(series) < 2:
        raise TooShort(f"a visibility graph needs >= 2 points, got {len(series)}")
    return (np.ascontiguousarray(series.t, dtype=np.float64),
            np.ascontiguousarray(series.y, dtype=np.float64))


@njit(cache=True)
def _push(buf, count, a, b):
    if count == buf.shape[0]:
        bigger = np.empty((buf.shape[0] * _GROW, 2), dtype=np.int64)
        bigger[:count] = buf[:count]
        buf = bigger
    buf[count, 0] = a
    buf[count, 1] = b
    return buf, count + 1


@njit(cache=True)
def _naive_edges(t, y):
    n = t.size
    buf = np.empty((max(16, 2 * n), 2), dtype=np.int64)
    count = 0
    for a in range(n - 1):
        for b in range(a + 1, n):
            visible = True
            for c in range(a + 1, b):
                if not (y[c] < y[b] + (y[a] - y[b]) * (t[b] - t[c]) / (t[b] - t[a])):
                    visible = False
                    break
            if visible:
                buf, count = _push(buf, count, a, b)
    return buf[:count]


@njit(cache=True)
def _fast_edges(t, y):
    n = t.size
    buf = np.empty((max(16, 4 * n), 2), dtype=np.int64)
    count = 0
    stack = np.empty((n + 1, 2), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = n
    top = 1
    while top > 0:
        top -= 1
        lo = stack[top, 0]
        hi = stack[top, 1]
        if hi - lo < 2:
            continue
        p = lo
        for k in range(lo + 1, hi):
            if y[k] > y[p]:
                p = k
        # Sweep right: k is visible iff its slope beats every intermediate.
        best = -np.inf
        for k in range(p + 1, hi):
            s = (y[k] - y[p]) / (t[k] - t[p])
            if s > best:
                buf, count = _push(buf, count, p, k)
                best = s
        best = -np.inf
        for k in range(p - 1, lo - 1, -1):
            s = (y[k] - y[p]) / (t[p] - t[k])
            if s > best:
                buf, count = _push(buf, count, k, p)
                best = s
        stack[top, 0] = lo
        stack[top, 1] = p
        top += 1
        stack[top, 0] = p + 1
        stack[top, 1] = hi
        top += 1
    return buf[:count]


def build_vg_naive(series: sc.TimeSeries) -> VisibilityGraph:
    """Reference builder: every pair against every intermediate, O(n^3) worst case."""
    t, y = _check_series(series)
    return VisibilityGraph.from_edges(t.size, _naive_edges(t, y))


def build_vg_fast(series: sc.TimeSeries) -> VisibilityGraph:
    """Divide-and-conquer builder; produces the same edge set as the naive one."""
    t, y = _check_series(series)
    return VisibilityGraph.from_edges(t.size, _fast_edges(t, y))


BUILDERS = {"fast": build_vg_fast, "naive": build_vg_naive}


def vg_from_audio(
    clip: sc.AudioClip,
    window_ms: float = sc.DEFAULT_WINDOW_MS,
    min_distance_ms: float = sc.DEFAULT_MIN_DISTANCE_MS,
    min_prominence: float = sc.DEFAULT_MIN_PROMINENCE,
    vg_input: str = "peaks",
    builder: str = "fast",
) -> VisibilityGraph:
    """Envelope -> peaks -> visibility graph.

    With ``vg_input="raw"`` the graph is built on the raw samples instead,
    which is only sensible for short clips.
    """
    build = BUILDERS[builder]
    if vg_input == "raw":
        return build(clip.as_series())
    if vg_input != "peaks":
        raise ValueError(f"vg_input must be 'peaks' or 'raw', got {vg_input!r}")
    env = sc.compute_envelope(clip, window_ms)
    if len(env) < 3:
        raise NoPeaks(f"clip {clip.source_id!r}: envelope too short for peak detection")
    peaks = sc.detect_peaks(env, min_distance_ms, min_prominence, window_ms=window_ms)
    if len(peaks) < 2:
        raise NoPeaks(f"clip {clip.source_id!r}: found {len(peaks)} envelope peak(s), need >= 2")
    return build(peaks.as_series())
