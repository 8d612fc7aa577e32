"""Multinomial (softmax) logistic regression with weighted cross-entropy and L2."""
from __future__ import annotations

import logging

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp, softmax

from .base import TrainedModel, as_csr, check_binary, sample_weights

logger = logging.getLogger(__name__)


def softmax_objective(W, b, X, y01, sw, lam):
    """Mean weighted cross-entropy plus ``lam / 2 * ||W||^2``.

    ``W`` has shape (n_classes, n_features) and the intercepts ``b`` are not
    penalised.  Returns ``(loss, grad_W, grad_b)``.
    """
    n = X.shape[0]
    Z = np.asarray(X @ W.T) + b
    lse = logsumexp(Z, axis=1)
    rows = np.arange(n)
    loss = np.dot(sw, lse - Z[rows, y01]) / n + 0.5 * lam * np.sum(W * W)
    R = softmax(Z, axis=1)
    R[rows, y01] -= 1.0
    R *= (sw / n)[:, None]
    grad_W = np.asarray(X.T @ R).T + lam * W
    grad_b = R.sum(axis=0)
    return loss, grad_W, grad_b


class LogisticRegression(TrainedModel):
    kind = "LR"

    def __init__(self, classes, W, b, converged, n_iter):
        super().__init__(classes, W.shape[1])
        self.W = W
        self.b = b
        self.converged = converged
        self.n_iter = n_iter

    def predict_proba(self, X) -> np.ndarray:
        X = self._check(X)
        return softmax(np.asarray(X @ self.W.T) + self.b, axis=1)

    def _positive_score(self, X):
        return softmax(np.asarray(X @ self.W.T) + self.b, axis=1)[:, 1]


def train_logreg(X, y, weights: dict | None = None, C: float = 1.0, lam: float | None = None,
                 tol: float = 1e-4, max_iter: int = 1000) -> LogisticRegression:
    """Fit by L-BFGS on the scaled objective ``N * f``.

    ``lam`` defaults to ``1 / (N * C)``.  Training stops once no parameter
    moves by ``tol`` or more in one iteration, or after ``max_iter``
    iterations (the model is then flagged as not converged).
    """
    X = as_csr(X)
    classes, y01 = check_binary(y, "LR")
    if not np.all(np.isfinite(X.data)):
        raise ValueError("LR: non-finite feature values")
    n, d = X.shape
    k = len(classes)
    sw = sample_weights(y, weights)
    lam = 1.0 / (n * C) if lam is None else lam

    def fun(theta):
        W = theta[: k * d].reshape(k, d)
        b = theta[k * d:]
        loss, gW, gb = softmax_objective(W, b, X, y01, sw, lam)
        return n * loss, n * np.concatenate([gW.ravel(), gb])

    state = {"prev": np.zeros(k * (d + 1)), "iters": 0, "small_step": False}

    def watch(intermediate_result):
        theta = intermediate_result.x
        state["iters"] += 1
        step = np.max(np.abs(theta - state["prev"])) if theta.size else 0.0
        state["prev"] = theta.copy()
        if step < tol:
            state["small_step"] = True
            raise StopIteration

    res = minimize(fun, np.zeros(k * (d + 1)), jac=True, method="L-BFGS-B", callback=watch,
                   options={"maxiter": max_iter, "gtol": 1e-10, "ftol": 0.0, "maxcor": 20})
    converged = state["small_step"] or bool(res.success)
    model = LogisticRegression(classes, res.x[: k * d].reshape(k, d), res.x[k * d:], converged, state["iters"])
    if not converged:
        msg = f"LR did not converge in {state['iters']} iterations ({res.message})"
        logger.warning(msg)
        model.warnings.append(msg)
    return model
