"""Soft-margin SVM with an RBF kernel, trained by SMO."""
from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp

from .. import _backend
from .base import TrainedModel, as_csr, check_binary, sample_weights

logger = logging.getLogger(__name__)

DEFAULT_MAX_ROWS = 20000


class RowCapExceeded(ValueError):
    pass


def _sqnorms(X: sp.csr_matrix) -> np.ndarray:
    return np.asarray(X.multiply(X).sum(axis=1)).ravel()


def rbf_kernel(A, B, gamma: float, chunk: int = 2048) -> np.ndarray:
    """Dense ``exp(-gamma * ||a - b||^2)`` between rows of A and rows of B."""
    A, B = as_csr(A), as_csr(B)
    na, nb = _sqnorms(A), _sqnorms(B)
    out = np.empty((A.shape[0], B.shape[0]))
    Bt = B.T.tocsc()
    for lo in range(0, A.shape[0], chunk):
        hi = min(lo + chunk, A.shape[0])
        dots = (A[lo:hi] @ Bt).toarray()
        d2 = na[lo:hi, None] + nb[None, :] - 2.0 * dots
        np.maximum(d2, 0.0, out=d2)
        out[lo:hi] = np.exp(-gamma * d2)
    return out


class KernelSVM(TrainedModel):
    """Decision value ``sum_t alpha_t y_t K(x_t, x) - rho``; positive means ``classes[1]``."""

    kind = "SVM"
    threshold = 0.0

    def __init__(self, classes, n_features, support_vectors, dual_coef, rho, gamma, alpha, converged, n_iter):
        super().__init__(classes, n_features)
        self.support_vectors = support_vectors
        self.dual_coef = dual_coef
        self.rho = rho
        self.gamma = gamma
        self.alpha = alpha
        self.converged = converged
        self.n_iter = n_iter

    def _positive_score(self, X):
        if self.support_vectors.shape[0] == 0:
            return np.full(X.shape[0], -self.rho)
        return rbf_kernel(X, self.support_vectors, self.gamma) @ self.dual_coef - self.rho


def train_svm_rbf(X, y, gamma: float = 1.0, C: float = 1.0, weights: dict | None = None,
                  eps: float = 1e-3, max_rows: int | None = DEFAULT_MAX_ROWS,
                  max_iter: int | None = None, cache_mb: float = 256.0) -> KernelSVM:
    X = as_csr(X)
    n = X.shape[0]
    if max_rows is not None and n > max_rows:
        raise RowCapExceeded(
            f"SVM: {n} training rows exceed the cap of {max_rows}; "
            "subsample the training set or raise the cap explicitly"
        )
    classes, y01 = check_binary(y, "SVM")
    ypm = np.where(y01 == 1, 1.0, -1.0)
    upper = C * sample_weights(y, weights)
    sq = _sqnorms(X)
    if max_iter is None:
        max_iter = max(10_000_000, 100 * n)
    cache_rows = int(max(2, min(n, cache_mb * 2**20 / (8 * max(n, 1)))))
    alpha, rho, n_iter, converged = _backend.smo_solve(
        X.indptr, X.indices, X.data, sq, X.shape[1], ypm, upper, float(gamma), float(eps), int(max_iter), cache_rows
    )
    sv = np.flatnonzero(alpha > 0.0)
    model = KernelSVM(classes, X.shape[1], X[sv], alpha[sv] * ypm[sv], rho, float(gamma), alpha, converged, n_iter)
    if not converged:
        msg = f"SVM: SMO stopped after {n_iter} iterations without reaching eps={eps}"
        logger.warning(msg)
        model.warnings.append(msg)
    return model
