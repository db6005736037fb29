"""Seven multiclass classifiers behind one fit/predict contract."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import Classifier, FeatureError, as_matrix
from .linear import LinearSVM, LogisticRegression, logreg_objective, softmax
from .naive_bayes import GaussianNB
from .neighbors import KNeighbors
from .svm import KernelSVC, SmoResult, dual_objective, rbf_kernel, rbf_kernel_matrix, smo_solve
from .tree import DecisionTree, RandomForest, best_split, gini_impurity

REGISTRY: dict[str, type[Classifier]] = {
    "knn": KNeighbors,
    "gnb": GaussianNB,
    "logreg": LogisticRegression,
    "linear_svm": LinearSVM,
    "svc_rbf": KernelSVC,
    "tree": DecisionTree,
    "forest": RandomForest,
}
ALGORITHMS = tuple(REGISTRY)

DEFAULTS: dict[str, dict] = {
    "knn": {"k": 3},
    "gnb": {"var_smoothing": 1e-9},
    "logreg": {"l2_strength": 1.0, "max_iter": 200, "tol": 1e-6},
    "linear_svm": {"C": 1.0, "max_epochs": 50, "seed": 0},
    "svc_rbf": {"C": 1.0, "gamma": "scale", "tol": 1e-3, "max_iter": None},
    "tree": {"min_samples_split": 2, "max_depth": None, "max_features": None, "seed": 0},
    "forest": {"n_estimators": 100, "bootstrap": True, "max_features": "sqrt",
               "min_samples_split": 2, "max_depth": None, "seed": 0},
}


@dataclass(frozen=True)
class ClassifierSpec:
    algorithm: str
    hyperparameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.algorithm not in REGISTRY:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}")
        unknown = set(self.hyperparameters) - set(DEFAULTS[self.algorithm])
        if unknown:
            raise ValueError(f"unknown hyperparameter(s) for {self.algorithm}: {', '.join(sorted(unknown))}")
        # fail fast on invalid values
        REGISTRY[self.algorithm](**self.resolved())

    def resolved(self) -> dict:
        return {**DEFAULTS[self.algorithm], **self.hyperparameters}

    def build(self) -> Classifier:
        return REGISTRY[self.algorithm](**self.resolved())


def fit(spec: ClassifierSpec | str, X, y, n_classes: int | None = None) -> Classifier:
    if isinstance(spec, str):
        spec = ClassifierSpec(spec)
    return spec.build().fit(X, y, n_classes)


def predict(model: Classifier, x) -> int:
    """Class index for a single feature vector."""
    if hasattr(x, "to_dense"):
        x = x.to_dense()
    return model.predict_one(np.asarray(x, dtype=np.float64))


def load_state(meta: dict, arrays: dict[str, np.ndarray]) -> Classifier:
    return REGISTRY[meta["algorithm"]].from_state(meta, arrays)


__all__ = [
    "ALGORITHMS", "DEFAULTS", "REGISTRY", "Classifier", "ClassifierSpec", "DecisionTree", "FeatureError",
    "GaussianNB", "KNeighbors", "KernelSVC", "LinearSVM", "LogisticRegression", "RandomForest", "SmoResult",
    "as_matrix", "best_split", "dual_objective", "fit", "gini_impurity", "load_state", "logreg_objective",
    "predict", "rbf_kernel", "rbf_kernel_matrix", "smo_solve", "softmax",
]
