"""CART classification trees (Gini criterion) and random forests."""

from __future__ import annotations

import math

import numpy as np

from .base import Classifier, as_matrix

# Weighted child impurity must undercut the parent by more than this.
MIN_DECREASE = 1e-12
TIE_TOLERANCE = 1e-12


def gini_impurity(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise ValueError("gini impurity of an empty node")
    p = counts / total
    return float(1.0 - np.dot(p, p))


def _search(X: np.ndarray, onehot: np.ndarray, features: np.ndarray):
    """Best (score, feature, threshold) over ``features``; score is m * weighted child Gini.

    ``features`` must be ascending so that argmin's first-hit rule breaks
    ties by lower feature index, then lower threshold.
    """
    m = X.shape[0]
    if m < 2 or features.size == 0:
        return None
    cols = X[:, features]
    order = np.argsort(cols, axis=0, kind="stable")
    vals = np.take_along_axis(cols, order, axis=0)
    left = np.cumsum(onehot[order], axis=0)[:-1]  # (m-1, f, C)
    total = onehot.sum(axis=0)
    right = total - left
    n_left = np.arange(1, m, dtype=np.float64)[:, None]
    n_right = m - n_left
    score = m - (left * left).sum(axis=2) / n_left - (right * right).sum(axis=2) / n_right
    valid = vals[:-1] < vals[1:]
    score = np.where(valid, score, np.inf).T  # (f, m-1)
    best = score.min()
    if not np.isfinite(best):
        return None
    # scores equal up to rounding are ties; the first in (feature, threshold) order wins
    flat = int(np.argmax(score <= best + TIE_TOLERANCE * m))
    f, pos = divmod(flat, m - 1)
    best = score[f, pos]
    lo, hi = vals[pos, f], vals[pos + 1, f]
    thr = (lo + hi) / 2.0
    if thr >= hi:
        thr = lo
    return float(best), int(features[f]), float(thr)


def best_split(X, y, feature_subset=None, n_classes: int | None = None):
    """(feature, threshold) minimising weighted child Gini, or None.

    Candidate thresholds are midpoints between consecutive distinct values;
    samples with ``x[feature] <= threshold`` go left. None is returned when
    no candidate lowers the node's impurity.
    """
    X = as_matrix(X)
    y = np.asarray(y, dtype=np.int64)
    C = int(n_classes if n_classes is not None else y.max() + 1)
    onehot = np.zeros((y.size, C))
    onehot[np.arange(y.size), y] = 1.0
    features = np.arange(X.shape[1]) if feature_subset is None else np.unique(np.asarray(feature_subset, dtype=np.int64))
    found = _search(X, onehot, features)
    if found is None:
        return None
    score, f, thr = found
    counts = onehot.sum(axis=0)
    parent = y.size - float(np.dot(counts, counts)) / y.size
    if score >= parent - MIN_DECREASE:
        return None
    return f, thr


def _build_tree(X, y, n_classes, max_features, rng, min_samples_split, max_depth):
    """Grow a tree depth-first; returns (feature, threshold, left, right, value) arrays."""
    d = X.shape[1]
    onehot_all = np.zeros((y.size, n_classes))
    onehot_all[np.arange(y.size), y] = 1.0
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(counts):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(counts)
        return len(feature) - 1

    root = new_node(onehot_all.sum(axis=0))
    stack = [(root, np.arange(y.size), 0)]
    while stack:
        node, idx, depth = stack.pop()
        counts = value[node]
        m = idx.size
        if m < min_samples_split or np.count_nonzero(counts) <= 1:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        Xn = X[idx]
        varying = np.flatnonzero(Xn.max(axis=0) > Xn.min(axis=0))
        if varying.size == 0:
            continue
        if max_features is not None and max_features < varying.size:
            # constant features do not count towards max_features
            perm = rng.permutation(d)
            is_varying = np.zeros(d, dtype=bool)
            is_varying[varying] = True
            feats = np.sort(perm[is_varying[perm]][:max_features])
        else:
            feats = varying
        oh = onehot_all[idx]
        found = _search(Xn, oh, feats)
        if found is None:
            continue
        score, f, thr = found
        parent = m - float(np.dot(counts, counts)) / m
        if score >= parent - MIN_DECREASE:
            continue
        go_left = Xn[:, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(onehot_all[li].sum(axis=0))
        right[node] = new_node(onehot_all[ri].sum(axis=0))
        # right pushed first so the left subtree is expanded first
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return (np.array(feature, dtype=np.int64), np.array(threshold, dtype=np.float64),
            np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
            np.array(value, dtype=np.float64).reshape(len(feature), n_classes))


def _apply(X, feature, threshold, left, right):
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    active = left[node] >= 0
    while active.any():
        r = rows[active]
        n = node[r]
        go_left = X[r, feature[n]] <= threshold[n]
        node[r] = np.where(go_left, left[n], right[n])
        active = left[node] >= 0
    return node


class DecisionTree(Classifier):
    """Unpruned CART tree; leaves predict their majority class (lower index on ties)."""

    algorithm = "tree"
    _arrays = ("feature_", "threshold_", "left_", "right_", "value_")

    def __init__(self, min_samples_split: int = 2, max_depth: int | None = None,
                 max_features: int | None = None, seed: int = 0):
        if min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        super().__init__(min_samples_split=min_samples_split, max_depth=max_depth,
                         max_features=max_features, seed=seed)
        self.min_samples_split = min_samples_split
        self.max_depth = max_depth
        self.max_features = max_features
        self.seed = seed

    def _fit(self, X, y, rng=None):
        # same stream as tree 0 of a forest with this seed
        rng = rng if rng is not None else np.random.default_rng([self.seed, 0])
        k = resolve_max_features(self.max_features, X.shape[1])
        (self.feature_, self.threshold_, self.left_, self.right_,
         self.value_) = _build_tree(X, y, self.n_classes_, k, rng,
                                    self.min_samples_split, self.max_depth)

    @property
    def node_count(self) -> int:
        return int(self.feature_.size)

    def apply(self, X) -> np.ndarray:
        return _apply(self._check(X), self.feature_, self.threshold_, self.left_, self.right_)

    def _predict(self, X):
        leaves = _apply(X, self.feature_, self.threshold_, self.left_, self.right_)
        return self.value_[leaves].argmax(axis=1)


def resolve_max_features(max_features, dim: int) -> int | None:
    if max_features is None or max_features == "all":
        return None
    if max_features == "sqrt":
        return max(1, math.ceil(math.sqrt(dim)))
    return int(max_features)


class RandomForest(Classifier):
    """Bagged CART trees with per-node feature subsampling; plurality vote.

    Tree i draws its bootstrap sample and feature subsets from
    ``default_rng([seed, i])``, so trees are independent of training order.
    """

    algorithm = "forest"
    _arrays = ("node_offsets_", "feature_", "threshold_", "left_", "right_", "value_")

    def __init__(self, n_estimators: int = 100, bootstrap: bool = True, max_features="sqrt",
                 min_samples_split: int = 2, max_depth: int | None = None, seed: int = 0):
        if n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        super().__init__(n_estimators=n_estimators, bootstrap=bootstrap, max_features=max_features,
                         min_samples_split=min_samples_split, max_depth=max_depth, seed=seed)
        self.n_estimators = n_estimators
        self.bootstrap = bootstrap
        self.max_features = max_features
        self.min_samples_split = min_samples_split
        self.max_depth = max_depth
        self.seed = seed

    def _fit(self, X, y):
        n = X.shape[0]
        k = resolve_max_features(self.max_features, X.shape[1])
        parts = []
        for i in range(self.n_estimators):
            rng = np.random.default_rng([self.seed, i])
            idx = rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            parts.append(_build_tree(X[idx], y[idx], self.n_classes_, k, rng,
                                     self.min_samples_split, self.max_depth))
        self._set_trees(parts)

    def _set_trees(self, parts):
        sizes = [p[0].size for p in parts]
        self.node_offsets_ = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self.feature_ = np.concatenate([p[0] for p in parts])
        self.threshold_ = np.concatenate([p[1] for p in parts])
        self.left_ = np.concatenate([p[2] for p in parts])
        self.right_ = np.concatenate([p[3] for p in parts])
        self.value_ = np.concatenate([p[4] for p in parts])

    def trees(self):
        """Per-tree (feature, threshold, left, right, value) arrays."""
        for t in range(self.node_offsets_.size - 1):
            s = slice(self.node_offsets_[t], self.node_offsets_[t + 1])
            yield self.feature_[s], self.threshold_[s], self.left_[s], self.right_[s], self.value_[s]

    def tree_predictions(self, X) -> np.ndarray:
        X = self._check(X)
        return np.vstack([v[_apply(X, f, th, l, r)].argmax(axis=1) for f, th, l, r, v in self.trees()])

    def _predict(self, X):
        preds = np.vstack([v[_apply(X, f, th, l, r)].argmax(axis=1) for f, th, l, r, v in self.trees()])
        votes = np.zeros((X.shape[0], self.n_classes_), dtype=np.int64)
        for row in preds:
            votes[np.arange(X.shape[0]), row] += 1
        return votes.argmax(axis=1)
