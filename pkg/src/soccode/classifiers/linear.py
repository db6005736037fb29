"""Linear models: multinomial logistic regression and a one-vs-rest linear SVM."""

from __future__ import annotations

import logging

import numpy as np
from numba import njit
from scipy.optimize import minimize

from .base import Classifier

logger = logging.getLogger(__name__)


def softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=-1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=-1, keepdims=True)


def logreg_objective(params: np.ndarray, X: np.ndarray, Y: np.ndarray, l2: float):
    """Negative log-likelihood plus ``l2/2 * ||W||^2`` and its gradient.

    ``params`` is ``[W.ravel(), b]`` with W of shape (C, d); ``Y`` is one-hot.
    The bias is not penalised.
    """
    C = Y.shape[1]
    d = X.shape[1]
    W = params[:C * d].reshape(C, d)
    b = params[C * d:]
    Z = X @ W.T + b
    Zmax = Z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(Z - Zmax).sum(axis=1, keepdims=True)) + Zmax
    nll = float(np.sum(logsum[:, 0] - np.sum(Z * Y, axis=1)))
    P = np.exp(Z - logsum)
    R = P - Y
    gW = R.T @ X + l2 * W
    gb = R.sum(axis=0)
    return nll + 0.5 * l2 * float(np.sum(W * W)), np.concatenate([gW.ravel(), gb])


class LogisticRegression(Classifier):
    """Multinomial (softmax) logistic regression fitted with L-BFGS."""

    algorithm = "logreg"
    _arrays = ("coef_", "intercept_")

    def __init__(self, l2_strength: float = 1.0, max_iter: int = 200, tol: float = 1e-6):
        if l2_strength < 0:
            raise ValueError("l2_strength must be >= 0")
        super().__init__(l2_strength=l2_strength, max_iter=max_iter, tol=tol)
        self.l2_strength = l2_strength
        self.max_iter = max_iter
        self.tol = tol

    def _fit(self, X, y):
        C, d = self.n_classes_, X.shape[1]
        Y = np.zeros((X.shape[0], C))
        Y[np.arange(X.shape[0]), y] = 1.0
        res = minimize(logreg_objective, np.zeros(C * (d + 1)), args=(X, Y, self.l2_strength),
                       jac=True, method="L-BFGS-B",
                       options={"maxiter": self.max_iter, "gtol": self.tol})
        if not res.success:
            logger.info("logistic regression stopped early: %s", res.message)
        self.coef_ = res.x[:C * d].reshape(C, d).copy()
        self.intercept_ = res.x[C * d:].copy()

    def decision_function(self, X) -> np.ndarray:
        return self._check(X) @ self.coef_.T + self.intercept_

    def predict_proba(self, X) -> np.ndarray:
        if self.constant_ is not None:
            out = np.zeros((as_rows(X), self.n_classes_))
            out[:, self.constant_] = 1.0
            return out
        return softmax(self.decision_function(X))

    def _predict(self, X):
        return (X @ self.coef_.T + self.intercept_).argmax(axis=1)


def as_rows(X) -> int:
    return np.atleast_2d(np.asarray(X)).shape[0]


@njit(cache=True)
def _pegasos(X, Y, lam, epochs, orders, radius):
    """Stochastic sub-gradient descent on the regularised hinge loss.

    Column d of W is the bias weight (the inputs are augmented with 1).
    """
    n, d = X.shape
    K = Y.shape[1]
    W = np.zeros((K, d + 1))
    t = 0
    for epoch in range(epochs):
        for s in range(n):
            i = orders[epoch, s]
            t += 1
            eta = 1.0 / (lam * t)
            shrink = 1.0 - eta * lam
            for k in range(K):
                margin = W[k, d]
                for j in range(d):
                    margin += W[k, j] * X[i, j]
                margin *= Y[i, k]
                for j in range(d + 1):
                    W[k, j] *= shrink
                if margin < 1.0:
                    step = eta * Y[i, k]
                    for j in range(d):
                        W[k, j] += step * X[i, j]
                    W[k, d] += step
                norm = 0.0
                for j in range(d + 1):
                    norm += W[k, j] * W[k, j]
                norm = np.sqrt(norm)
                if norm > radius:
                    scale = radius / norm
                    for j in range(d + 1):
                        W[k, j] *= scale
    return W


class LinearSVM(Classifier):
    """One-vs-rest linear SVM trained with the Pegasos step size ``1/(lambda t)``.

    ``lambda = 1 / (C n)`` so that C plays its usual soft-margin role. Each
    epoch visits the rows in a permutation drawn from ``seed``.
    """

    algorithm = "linear_svm"
    _arrays = ("coef_", "intercept_")

    def __init__(self, C: float = 1.0, max_epochs: int = 50, seed: int = 0):
        if C <= 0:
            raise ValueError("C must be > 0")
        super().__init__(C=C, max_epochs=max_epochs, seed=seed)
        self.C = C
        self.max_epochs = max_epochs
        self.seed = seed

    def _fit(self, X, y):
        n = X.shape[0]
        K = self.n_classes_
        Y = -np.ones((n, K))
        Y[np.arange(n), y] = 1.0
        lam = 1.0 / (self.C * n)
        rng = np.random.default_rng(self.seed)
        orders = np.vstack([rng.permutation(n) for _ in range(self.max_epochs)])
        W = _pegasos(np.ascontiguousarray(X), Y, lam, self.max_epochs, orders, 1.0 / np.sqrt(lam))
        self.coef_ = W[:, :-1].copy()
        self.intercept_ = W[:, -1].copy()

    def decision_function(self, X) -> np.ndarray:
        return self._check(X) @ self.coef_.T + self.intercept_

    def _predict(self, X):
        return (X @ self.coef_.T + self.intercept_).argmax(axis=1)
