"""A small, fully deterministic random forest for binary labels.

Trees are CART with Gini impurity, grown on same-size bootstrap samples and a
random subset of features at every node.  Tree ``i`` draws from its own RNG
stream seeded by ``(seed, i)``, so serial and threaded training produce the
same model.  Rows are put in a canonical order before sampling, which makes
the model independent of the order the training rows arrive in.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import DimensionMismatch, EmptyData, SingleClass

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 200
    max_depth: int = 8
    min_leaf: int = 2
    features_per_split: int | None = None  # None -> ceil(sqrt(d))
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 0 or self.min_leaf < 1:
            raise ValueError(f"invalid forest config {self}")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValueError("features_per_split must be >= 1")


@dataclass
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray
    subject_ids: Sequence[str] = ()
    feature_names: Sequence[str] = ()
    split: str = "train"

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        self.y = np.asarray(self.y, dtype=np.int64).ravel()
        if self.X.shape[0] == 0 or self.X.size == 0:
            raise EmptyData("dataset has no rows")
        if self.X.shape[0] != self.y.size:
            raise DimensionMismatch(f"{self.X.shape[0]} rows but {self.y.size} labels")
        if not np.all(np.isin(self.y, (0, 1))):
            raise ValueError("labels must be 0 or 1")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("features must be finite")
        if not self.subject_ids:
            self.subject_ids = tuple(str(i) for i in range(self.y.size))
        if not self.feature_names:
            self.feature_names = tuple(f"x{i}" for i in range(self.X.shape[1]))
        if len(self.feature_names) != self.X.shape[1]:
            raise DimensionMismatch("feature_names length differs from the column count")

    @property
    def n_features(self) -> int:
        return int(self.X.shape[1])


@dataclass
class Tree:
    """Flat node arrays; ``feature == -1`` marks a leaf.

    Samples with ``x[feature] <= threshold`` go left.  ``proba[k]`` is the
    (negative, positive) class distribution at node k.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    proba: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                return node
            r, nd = rows[inner], node[inner]
            go_left = X[r, f[inner]] <= self.threshold[nd]
            node[inner] = np.where(go_left, self.left[nd], self.right[nd])

    def predict_positive(self, X: np.ndarray) -> np.ndarray:
        return self.proba[self.apply(X), 1]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "proba": self.proba.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["proba"], dtype=np.float64).reshape(-1, 2),
        )


@dataclass
class RandomForestModel:
    trees: list[Tree]
    config: ForestConfig
    n_features: int
    feature_names: tuple[str, ...] = ()
    # Optional z-score statistics, fitted on the training split only.
    normalization: dict | None = field(default=None)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def _prepare(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(f"model expects {self.n_features} features, got {X.shape[1]}")
        if self.normalization is not None:
            X = (X - np.asarray(self.normalization["mean"])) / np.asarray(self.normalization["std"])
        return X

    def predict_proba(self, X) -> np.ndarray:
        """Positive-class probability per row: the mean over trees."""
        X = self._prepare(X)
        acc = np.zeros(X.shape[0])
        for tree in self.trees:
            acc += tree.predict_positive(X)
        return acc / len(self.trees)

    def to_json(self) -> str:
        payload = {
            "format_version": FORMAT_VERSION,
            "config": asdict(self.config),
            "n_features": self.n_features,
            "feature_names": list(self.feature_names),
            "normalization": self.normalization,
            "trees": [t.to_dict() for t in self.trees],
        }
        return json.dumps(payload, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "RandomForestModel":
        payload = json.loads(text)
        if payload.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format {payload.get('format_version')!r}")
        return cls(
            trees=[Tree.from_dict(t) for t in payload["trees"]],
            config=ForestConfig(**payload["config"]),
            n_features=int(payload["n_features"]),
            feature_names=tuple(payload["feature_names"]),
            normalization=payload.get("normalization"),
        )

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "RandomForestModel":
        return cls.from_json(Path(path).read_text())


def predict_proba(model: RandomForestModel, x) -> float | np.ndarray:
    """Probability for one vector (returns a float) or a matrix of rows."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        if x.size != model.n_features:
            raise DimensionMismatch(f"model expects {model.n_features} features, got {x.size}")
        return float(model.predict_proba(x[None, :])[0])
    return model.predict_proba(x)


# --------------------------------------------------------------------------
# Training
# --------------------------------------------------------------------------

def _best_split(X, y, rows, features, min_leaf):
    """Best (feature, threshold) by weighted Gini, or None.

    Maximizing sum over children of (pos^2 + neg^2) / count is the same as
    minimizing the weighted Gini impurity.  Candidates are visited in
    ascending feature index, then ascending threshold, and only a strictly
    better score replaces the incumbent.
    """
    n = rows.size
    best_score = -np.inf
    best = None
    yr = y[rows]
    for f in features:
        xs = X[rows, f]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        pos = np.cumsum(yr[order])
        n_left = np.arange(1, n)
        valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
        if not valid.any():
            continue
        pl = pos[:-1].astype(np.float64)
        nl = n_left.astype(np.float64)
        pr = pos[-1] - pl
        nr = n - nl
        score = (pl * pl + (nl - pl) ** 2) / nl + (pr * pr + (nr - pr) ** 2) / nr
        score[~valid] = -np.inf
        k = int(np.argmax(score))
        if score[k] > best_score:
            lo, hi = xs[k], xs[k + 1]
            thr = lo + (hi - lo) / 2.0
            if not lo <= thr < hi:
                thr = lo
            best_score = score[k]
            best = (int(f), float(thr))
    return best


def _grow_tree(X, y, config: ForestConfig, k_features: int, rng: np.random.Generator) -> Tree:
    m, d = X.shape
    boot = np.sort(rng.integers(0, m, size=m))
    feature, threshold, left, right, proba = [], [], [], [], []

    def new_node(rows):
        p1 = float(y[rows].mean())
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        proba.append((1.0 - p1, p1))
        return len(feature) - 1

    # Depth-first with an explicit stack; children are numbered in creation order.
    root = new_node(boot)
    stack = [(root, boot, 0)]
    while stack:
        node, rows, depth = stack.pop()
        positives = int(y[rows].sum())
        if depth >= config.max_depth or rows.size < 2 * config.min_leaf or positives in (0, rows.size):
            continue
        features = np.sort(rng.choice(d, size=k_features, replace=False))
        split = _best_split(X, y, rows, features, config.min_leaf)
        if split is None:
            continue
        f, thr = split
        mask = X[rows, f] <= thr
        l_rows, r_rows = rows[mask], rows[~mask]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(l_rows)
        right[node] = new_node(r_rows)
        stack.append((right[node], r_rows, depth + 1))
        stack.append((left[node], l_rows, depth + 1))

    return Tree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(proba, dtype=np.float64).reshape(-1, 2),
    )


def _zscore_stats(X: np.ndarray) -> dict:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    return {"mean": mean.tolist(), "std": std.tolist()}


def train_random_forest(
    data: LabeledDataset,
    config: ForestConfig = ForestConfig(),
    n_threads: int = 1,
    zscore: bool = False,
) -> RandomForestModel:
    X, y = data.X, data.y
    if X.shape[0] < 2:
        raise EmptyData(f"need at least 2 rows, got {X.shape[0]}")
    if np.unique(y).size < 2:
        raise SingleClass("training data contains a single class")

    normalization = _zscore_stats(X) if zscore else None
    if normalization is not None:
        X = (X - np.asarray(normalization["mean"])) / np.asarray(normalization["std"])

    canon = np.lexsort(np.vstack([y[None, :], X.T[::-1]]))
    X = np.ascontiguousarray(X[canon])
    y = y[canon]

    d = X.shape[1]
    k = config.features_per_split or math.ceil(math.sqrt(d))
    k = min(k, d)

    def build(i: int) -> Tree:
        return _grow_tree(X, y, config, k, np.random.default_rng([config.seed, i]))

    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            trees = list(pool.map(build, range(config.n_trees)))
    else:
        trees = [build(i) for i in range(config.n_trees)]

    return RandomForestModel(trees, config, d, tuple(data.feature_names), normalization)
