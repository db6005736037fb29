from __future__ import annotations

import numpy as np


class FeatureError(ValueError):
    """Feature matrix has the wrong shape or contains non-finite values."""


def as_matrix(X) -> np.ndarray:
    """Stack feature rows into a float64 matrix.

    Accepts a 2-D array, a list of 1-D arrays, or a list of sparse vectors
    (anything with ``to_dense``), which are densified.
    """
    if isinstance(X, np.ndarray):
        M = X
    else:
        rows = list(X)
        if rows and hasattr(rows[0], "to_dense"):
            if any(not hasattr(r, "to_dense") for r in rows):
                raise FeatureError("mixed sparse and dense rows")
            M = np.vstack([r.to_dense() for r in rows])
        else:
            M = np.asarray(rows)
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M.reshape(1, -1)
    if M.ndim != 2:
        raise FeatureError(f"expected a 2-D feature matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise FeatureError("features contain NaN or infinite values")
    return M


class Classifier:
    """Shared fit/predict plumbing.

    Subclasses implement ``_fit`` and ``_predict`` for the multi-class case and
    list their learned arrays in ``_arrays``. Training data with a single
    distinct label yields a constant predictor.
    """

    algorithm = ""
    _arrays: tuple[str, ...] = ()

    def __init__(self, **params):
        self.params = params
        self.dim_ = None
        self.n_classes_ = None
        self.constant_ = None

    def fit(self, X, y, n_classes: int | None = None) -> "Classifier":
        X = as_matrix(X)
        y = np.asarray(y, dtype=np.int64)
        if X.shape[0] != y.shape[0]:
            raise FeatureError(f"{X.shape[0]} rows but {y.shape[0]} labels")
        if X.shape[0] == 0:
            raise FeatureError("empty training set")
        if y.min() < 0:
            raise ValueError("labels must be non-negative class indices")
        self.dim_ = X.shape[1]
        self.n_classes_ = int(n_classes if n_classes is not None else y.max() + 1)
        if y.max() >= self.n_classes_:
            raise ValueError("label index exceeds n_classes")
        present = np.unique(y)
        if present.size == 1:
            self.constant_ = int(present[0])
            return self
        self.constant_ = None
        self._fit(X, y)
        return self

    def _check(self, X) -> np.ndarray:
        if self.dim_ is None:
            raise RuntimeError("classifier is not fitted")
        X = as_matrix(X)
        if X.shape[1] != self.dim_:
            raise FeatureError(f"expected {self.dim_} features, got {X.shape[1]}")
        return X

    def predict(self, X) -> np.ndarray:
        X = self._check(X)
        if self.constant_ is not None:
            return np.full(X.shape[0], self.constant_, dtype=np.int64)
        return self._predict(X).astype(np.int64)

    def predict_one(self, x) -> int:
        return int(self.predict(np.asarray(x, dtype=np.float64).reshape(1, -1))[0])

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        raise NotImplementedError

    def _predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- persistence -------------------------------------------------------
    def get_state(self) -> tuple[dict, dict[str, np.ndarray]]:
        meta = {
            "algorithm": self.algorithm,
            "params": self.params,
            "dim": self.dim_,
            "n_classes": self.n_classes_,
            "constant": self.constant_,
        }
        arrays = {} if self.constant_ is not None else {k: getattr(self, k) for k in self._arrays}
        return meta, arrays

    @classmethod
    def from_state(cls, meta: dict, arrays: dict[str, np.ndarray]) -> "Classifier":
        obj = cls(**meta["params"])
        obj.dim_ = meta["dim"]
        obj.n_classes_ = meta["n_classes"]
        obj.constant_ = meta["constant"]
        for k, v in arrays.items():
            setattr(obj, k, v)
        obj._restore()
        return obj

    def _restore(self) -> None:
        """Hook for rebuilding derived attributes after loading."""
