from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .base import Classifier


class GaussianNB(Classifier):
    """Gaussian naive Bayes with per-class feature means and variances.

    Sparse inputs are treated densely: an absent n-gram is an observed 0.
    Every variance is increased by ``var_smoothing`` times the largest
    per-feature variance of the training data.
    """

    algorithm = "gnb"
    _arrays = ("class_count_", "theta_", "var_", "epsilon_")

    def __init__(self, var_smoothing: float = 1e-9):
        super().__init__(var_smoothing=var_smoothing)
        self.var_smoothing = var_smoothing

    def _fit(self, X, y):
        C = self.n_classes_
        d = X.shape[1]
        self.epsilon_ = np.array(self.var_smoothing * X.var(axis=0).max())
        self.class_count_ = np.bincount(y, minlength=C).astype(np.float64)
        self.theta_ = np.zeros((C, d))
        self.var_ = np.ones((C, d))
        for c in range(C):
            rows = X[y == c]
            if rows.shape[0]:
                self.theta_[c] = rows.mean(axis=0)
                self.var_[c] = rows.var(axis=0)
        self.var_ += self.epsilon_
        # all-constant features leave epsilon at 0
        np.maximum(self.var_, np.finfo(np.float64).tiny, out=self.var_)

    def joint_log_likelihood(self, X) -> np.ndarray:
        X = self._check(X)
        with np.errstate(divide="ignore"):
            log_prior = np.log(self.class_count_ / self.class_count_.sum())
        norm = -0.5 * np.sum(np.log(2.0 * np.pi * self.var_), axis=1)
        sq = ((X[:, None, :] - self.theta_[None, :, :]) ** 2 / self.var_[None, :, :]).sum(axis=2)
        return log_prior + norm - 0.5 * sq

    def log_posterior(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        return jll - logsumexp(jll, axis=1, keepdims=True)

    def _predict(self, X):
        return self.joint_log_likelihood(X).argmax(axis=1)
