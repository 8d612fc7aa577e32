"""CART decision trees (weighted Gini) and random forests built on them."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .. import _backend
from .base import TrainedModel, as_csr, check_binary, sample_weights

MIN_GAIN = 1e-12


@dataclass
class Tree:
    """Array-encoded binary tree; ``left[n] == -1`` marks a leaf.

    ``value[n]`` holds the weighted class totals of the training samples
    that reached node ``n``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    depth: np.ndarray
    gain: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def max_depth(self) -> int:
        return int(self.depth.max())

    def apply(self, X) -> np.ndarray:
        X = as_csr(X)
        return _backend.apply_tree(X.indptr, X.indices, X.data, self.feature, self.threshold, self.left, self.right)

    def leaf_positive_fraction(self) -> np.ndarray:
        tot = self.value.sum(axis=1)
        return np.divide(self.value[:, 1], tot, out=np.zeros_like(tot), where=tot > 0)


class _TrainingData:
    """Column and row views of the training matrix shared by every tree."""

    def __init__(self, X: sp.csr_matrix, y01: np.ndarray):
        self.row_ptr = X.indptr.astype(np.int64)
        self.row_cols = X.indices.astype(np.int64)
        csc = X.tocsc()
        csc.sort_indices()
        self.indptr = csc.indptr.astype(np.int64)
        self.indices = csc.indices.astype(np.int64)
        self.data = csc.data
        self.y = y01
        self.n_rows, self.n_features = X.shape
        self._scratch = np.zeros(self.n_rows)
        self._mark = np.zeros(self.n_features, dtype=np.uint8)

    def column(self, f: int, rows: np.ndarray) -> np.ndarray:
        lo, hi = self.indptr[f], self.indptr[f + 1]
        s = self._scratch
        s[self.indices[lo:hi]] = self.data[lo:hi]
        vals = s[rows]
        s[self.indices[lo:hi]] = 0.0
        return vals

    def present_features(self, rows: np.ndarray) -> np.ndarray:
        return _backend.present_features(self.row_ptr, self.row_cols, rows, self._mark)


def build_tree(data: _TrainingData, weight: np.ndarray, max_depth: int | None,
               max_features: int | None, rng: np.random.Generator | None) -> Tree:
    """Greedy CART growth.  ``weight`` is per-row (zero for rows not drawn).

    At each node the candidates are the features with a non-zero value in
    the node; when ``max_features`` is set a uniform sample of that many is
    drawn from them.  Splits need a Gini decrease above ``MIN_GAIN``.
    """
    feature, threshold, left, right, value, depth, gain = [], [], [], [], [], [], []
    node_weight = np.zeros(data.n_rows)
    y = data.y

    def new_node(rows, d):
        w = weight[rows]
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append((float(np.cumsum(w[y[rows] == 0])[-1]) if np.any(y[rows] == 0) else 0.0,
                      float(np.cumsum(w[y[rows] == 1])[-1]) if np.any(y[rows] == 1) else 0.0))
        depth.append(d)
        gain.append(0.0)
        return len(feature) - 1

    root_rows = np.flatnonzero(weight > 0)
    stack = [(new_node(root_rows, 0), root_rows)]
    while stack:
        node, rows = stack.pop()
        w0, w1 = value[node]
        if len(rows) < 2 or w0 <= 0.0 or w1 <= 0.0:
            continue
        if max_depth is not None and depth[node] >= max_depth:
            continue
        candidates = data.present_features(rows)
        if max_features is not None and len(candidates) > max_features:
            candidates = np.sort(rng.choice(candidates, size=max_features, replace=False))
        if not len(candidates):
            continue
        node_weight[rows] = weight[rows]
        f, thr, g = _backend.best_split(data.indptr, data.indices, data.data, candidates.astype(np.int64),
                                        node_weight, y, w0, w1, len(rows), MIN_GAIN)
        node_weight[rows] = 0.0
        if f < 0:
            continue
        go_left = data.column(f, rows) <= thr
        lrows, rrows = rows[go_left], rows[~go_left]
        feature[node], threshold[node], gain[node] = int(f), float(thr), float(g)
        left[node] = new_node(lrows, depth[node] + 1)
        right[node] = new_node(rrows, depth[node] + 1)
        # right pushed first so the left subtree is numbered first
        stack.append((right[node], rrows))
        stack.append((left[node], lrows))
    return Tree(
        np.asarray(feature, dtype=np.int64), np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int64), np.asarray(right, dtype=np.int64),
        np.asarray(value, dtype=np.float64).reshape(-1, 2), np.asarray(depth, dtype=np.int64),
        np.asarray(gain, dtype=np.float64),
    )


class DecisionTree(TrainedModel):
    kind = "DTC"

    def __init__(self, classes, n_features, tree: Tree):
        super().__init__(classes, n_features)
        self.tree = tree

    def _positive_score(self, X):
        return self.tree.leaf_positive_fraction()[self.tree.apply(X)]

    def predict(self, X):
        leaves = self.tree.apply(self._check(X))
        v = self.tree.value[leaves]
        return self.classes[(v[:, 1] > v[:, 0]).astype(np.int64)]


def train_dtree(X, y, weights: dict | None = None, criterion: str = "gini",
                max_depth: int | None = 6, seed: int = 0) -> DecisionTree:
    if criterion != "gini":
        raise ValueError(f"unsupported criterion {criterion!r}; only 'gini' is implemented")
    X = as_csr(X)
    y = np.asarray(y)
    classes = np.unique(y)
    y01 = (y == classes[-1]).astype(np.int64) if len(classes) == 2 else np.zeros(len(y), np.int64)
    if len(classes) > 2:
        raise ValueError(f"DTC supports binary labels, got {classes.tolist()}")
    if len(classes) == 1:
        # single-class data: one leaf; classes padded so predict() indexes cleanly
        classes = np.array([classes[0], classes[0]])
    data = _TrainingData(X, y01)
    tree = build_tree(data, sample_weights(y, weights), max_depth, None, None)
    return DecisionTree(classes, X.shape[1], tree)


class RandomForest(TrainedModel):
    """Majority vote of the trees; the score is the fraction voting ``classes[1]``."""

    kind = "RFC"

    def __init__(self, classes, n_features, trees: list[Tree]):
        super().__init__(classes, n_features)
        self.trees = trees

    def votes(self, X) -> np.ndarray:
        X = self._check(X)
        out = np.empty((X.shape[0], len(self.trees)), dtype=np.int8)
        for t, tree in enumerate(self.trees):
            v = tree.value[tree.apply(X)]
            out[:, t] = v[:, 1] > v[:, 0]
        return out

    def _positive_score(self, X):
        return self.votes(X).sum(axis=1) / len(self.trees)


def resolve_max_features(max_features, n_features: int) -> int | None:
    if max_features in (None, "all"):
        return None
    if max_features == "sqrt":
        return max(1, math.ceil(math.sqrt(n_features)))
    if max_features == "log2":
        return max(1, math.ceil(math.log2(max(n_features, 2))))
    if isinstance(max_features, float) and 0 < max_features <= 1:
        return max(1, math.ceil(max_features * n_features))
    return max(1, int(max_features))


def train_rforest(X, y, weights: dict | None = None, n_estimators: int = 400, max_features="sqrt",
                  seed: int = 0, bootstrap: bool = True, max_depth: int | None = None) -> RandomForest:
    """Tree ``t`` draws from ``default_rng([seed, t])``, independent of the other trees."""
    X = as_csr(X)
    classes, y01 = check_binary(y, "RFC")
    data = _TrainingData(X, y01)
    base_w = sample_weights(y, weights)
    m = resolve_max_features(max_features, X.shape[1])
    n = X.shape[0]
    trees = []
    for t in range(n_estimators):
        rng = np.random.default_rng([seed, t])
        if bootstrap:
            w = base_w * np.bincount(rng.integers(0, n, n), minlength=n)
        else:
            w = base_w
        trees.append(build_tree(data, w, max_depth, m, rng))
    return RandomForest(classes, X.shape[1], trees)
