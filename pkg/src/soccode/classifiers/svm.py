"""Kernel SVM: RBF kernel, an SMO dual solver and a one-vs-one classifier."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .base import Classifier, FeatureError

logger = logging.getLogger(__name__)

TAU = 1e-12


def rbf_kernel(x, z, gamma: float) -> float:
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape:
        raise FeatureError(f"dimension mismatch: {x.shape} vs {z.shape}")
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    diff = x - z
    return math.exp(-gamma * float(np.dot(diff, diff)))


def rbf_kernel_matrix(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


@dataclass
class SmoResult:
    alphas: np.ndarray
    bias: float
    converged: bool
    iterations: int
    objective: list[float] = field(default_factory=list)

    def decision(self, K_rows: np.ndarray, y: np.ndarray) -> np.ndarray:
        """f(x) for kernel rows ``K_rows[m, i] = k(x_m, x_i)`` against the training set."""
        return K_rows @ (self.alphas * y) + self.bias


def _bias(alpha, G, y, C):
    # b = -rho, rho as in LIBSVM: average of y*G over free alphas, otherwise
    # the midpoint of the feasible interval.
    yG = y * G
    upper = alpha >= C
    lower = alpha <= 0
    free = ~upper & ~lower
    if free.any():
        rho = float(yG[free].mean())
    else:
        ub_mask = (upper & (y < 0)) | (lower & (y > 0))
        lb_mask = (upper & (y > 0)) | (lower & (y < 0))
        ub = float(yG[ub_mask].min()) if ub_mask.any() else math.inf
        lb = float(yG[lb_mask].max()) if lb_mask.any() else -math.inf
        rho = 0.5 * (ub + lb)
    return -rho


def smo_solve(K, y, C: float, tol: float = 1e-3, max_iter: int | None = None,
              track_objective: bool = False) -> SmoResult:
    """Maximise the soft-margin SVM dual by sequential minimal optimisation.

    Pairs are chosen by maximal violation for the first index and by the
    second-order gain for the second. Stops when the largest KKT violation
    gap falls below ``tol``; if ``max_iter`` is reached first, the current
    iterate is returned with ``converged=False``.
    """
    K = np.asarray(K, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    if K.shape != (n, n):
        raise ValueError(f"kernel matrix shape {K.shape} does not match {n} labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be +1 or -1")
    if C <= 0:
        raise ValueError("C must be > 0")
    if max_iter is None:
        max_iter = max(10_000, 100 * n)

    alpha = np.zeros(n)
    G = -np.ones(n)  # gradient of 1/2 a'Qa - e'a
    diagK = np.diag(K).copy()
    objective = [0.0] if track_objective else []
    converged = False
    it = 0
    while it < max_iter:
        minus_yG = -y * G
        up = ((alpha < C) & (y > 0)) | ((alpha > 0) & (y < 0))
        low = ((alpha < C) & (y < 0)) | ((alpha > 0) & (y > 0))
        if not up.any() or not low.any():
            converged = True
            break
        cand = np.where(up, minus_yG, -np.inf)
        i = int(np.argmax(cand))
        g_max = cand[i]
        g_min = float(np.min(minus_yG[low]))
        if g_max - g_min < tol:
            converged = True
            break
        b = g_max - minus_yG
        a = diagK[i] + diagK - 2.0 * K[i]
        a = np.where(a > 0, a, TAU)
        gain = np.where(low & (b > 0), -(b * b) / a, np.inf)
        j = int(np.argmin(gain))
        if not np.isfinite(gain[j]):
            converged = True
            break

        yi, yj = y[i], y[j]
        old_i, old_j = alpha[i], alpha[j]
        quad = max(diagK[i] + diagK[j] - 2.0 * K[i, j], TAU)
        if yi != yj:
            delta = (-G[i] - G[j]) / quad
            diff = old_i - old_j
            ai, aj = old_i + delta, old_j + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = old_i + old_j
            ai, aj = old_i - delta, old_j + delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        G += y * (yi * (ai - old_i) * K[:, i] + yj * (aj - old_j) * K[:, j])
        it += 1
        if track_objective:
            objective.append(0.5 * float(np.dot(alpha, 1.0 - G)))

    if not converged:
        logger.warning("SMO did not converge within %d iterations", max_iter)
    return SmoResult(alpha, _bias(alpha, G, y, C), converged, it, objective)


def dual_objective(alpha: np.ndarray, K: np.ndarray, y: np.ndarray) -> float:
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


class KernelSVC(Classifier):
    """RBF-kernel SVM; multi-class by one-vs-one voting.

    For the pair (a, b) with a < b, class a is the positive side. Tied votes
    go to the lower class index. ``gamma="scale"`` means
    ``1 / (dim * X.var())`` on the training matrix.
    """

    algorithm = "svc_rbf"
    _arrays = ("support_", "pairs_", "pair_offsets_", "pair_sv_", "pair_coef_", "pair_bias_", "gamma_")

    def __init__(self, C: float = 1.0, gamma="scale", tol: float = 1e-3, max_iter: int | None = None):
        if C <= 0:
            raise ValueError("C must be > 0")
        if not (gamma == "scale" or (isinstance(gamma, (int, float)) and gamma > 0)):
            raise ValueError("gamma must be 'scale' or a positive number")
        super().__init__(C=C, gamma=gamma, tol=tol, max_iter=max_iter)
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter

    def _fit(self, X, y):
        if self.gamma == "scale":
            var = X.var()
            gamma = 1.0 / (X.shape[1] * var) if var > 0 else 1.0
        else:
            gamma = float(self.gamma)
        self.gamma_ = np.array(gamma)
        K = rbf_kernel_matrix(X, X, gamma)
        classes = np.unique(y)
        pairs, offsets, sv_rows, coefs, biases = [], [0], [], [], []
        self.converged_ = True
        for a, b in combinations(classes.tolist(), 2):
            idx = np.flatnonzero((y == a) | (y == b))
            yy = np.where(y[idx] == a, 1.0, -1.0)
            res = smo_solve(K[np.ix_(idx, idx)], yy, self.C, self.tol, self.max_iter)
            self.converged_ &= res.converged
            keep = res.alphas > 0
            pairs.append((a, b))
            sv_rows.append(idx[keep])
            coefs.append(res.alphas[keep] * yy[keep])
            biases.append(res.bias)
            offsets.append(offsets[-1] + int(keep.sum()))
        all_sv = np.concatenate(sv_rows)
        support, inverse = np.unique(all_sv, return_inverse=True)
        self.X_sv_ = X[support]
        self.support_ = self.X_sv_
        self.pairs_ = np.array(pairs, dtype=np.int64).reshape(-1, 2)
        self.pair_offsets_ = np.array(offsets, dtype=np.int64)
        self.pair_sv_ = inverse.astype(np.int64)
        self.pair_coef_ = np.concatenate(coefs)
        self.pair_bias_ = np.array(biases)

    def _restore(self):
        if self.constant_ is None:
            self.X_sv_ = self.support_

    def pair_decisions(self, X: np.ndarray) -> np.ndarray:
        Ks = rbf_kernel_matrix(X, self.X_sv_, float(self.gamma_))
        out = np.empty((X.shape[0], len(self.pairs_)))
        for p in range(len(self.pairs_)):
            lo, hi = self.pair_offsets_[p], self.pair_offsets_[p + 1]
            out[:, p] = Ks[:, self.pair_sv_[lo:hi]] @ self.pair_coef_[lo:hi] + self.pair_bias_[p]
        return out

    def _predict(self, X):
        dec = self.pair_decisions(X)
        votes = np.zeros((X.shape[0], self.n_classes_), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for p, (a, b) in enumerate(self.pairs_):
            winner = np.where(dec[:, p] > 0, a, b)
            np.add.at(votes, (rows, winner), 1)
        return votes.argmax(axis=1)
