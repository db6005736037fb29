from __future__ import annotations

import numpy as np

from .base import Classifier

_CHUNK_FLOATS = 4_000_000


class KNeighbors(Classifier):
    """Majority vote of the k nearest training rows by Euclidean distance.

    Equidistant neighbours are ranked by training index; tied votes go to the
    lower class index.
    """

    algorithm = "knn"
    _arrays = ("X_", "y_")

    def __init__(self, k: int = 3):
        if k < 1:
            raise ValueError("k must be >= 1")
        super().__init__(k=k)
        self.k = k

    def _fit(self, X, y):
        self.X_ = X.copy()
        self.y_ = y.copy()

    def neighbors(self, X: np.ndarray) -> np.ndarray:
        """Indices of the k nearest training rows for each query row."""
        k = min(self.k, self.X_.shape[0])
        n, d = self.X_.shape
        step = max(1, _CHUNK_FLOATS // max(1, n * d))
        out = np.empty((X.shape[0], k), dtype=np.int64)
        for start in range(0, X.shape[0], step):
            Q = X[start:start + step]
            diff = self.X_[None, :, :] - Q[:, None, :]
            d2 = np.einsum("qnd,qnd->qn", diff, diff)
            out[start:start + step] = np.argsort(d2, axis=1, kind="stable")[:, :k]
        return out

    def _predict(self, X):
        idx = self.neighbors(X)
        votes = np.zeros((X.shape[0], self.n_classes_), dtype=np.int64)
        np.add.at(votes, (np.arange(X.shape[0])[:, None], self.y_[idx]), 1)
        return votes.argmax(axis=1)
