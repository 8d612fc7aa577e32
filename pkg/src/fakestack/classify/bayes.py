from __future__ import annotations

import logging

import numpy as np
from scipy.special import logsumexp

from .base import TrainedModel, as_csr, check_binary

logger = logging.getLogger(__name__)


def _ignore_weights(kind, weights, model):
    if weights is not None:
        msg = f"{kind}: class weights are not supported and were ignored"
        logger.warning(msg)
        model.warnings.append(msg)


def _class_sums(X, y01):
    onehot = np.stack([y01 == 0, y01 == 1], axis=1).astype(np.float64)
    return np.asarray((X.T @ onehot).T), onehot.sum(axis=0)


class _NaiveBayes(TrainedModel):
    def __init__(self, classes, class_log_prior, feature_log_prob):
        super().__init__(classes, feature_log_prob.shape[1])
        self.class_log_prior = class_log_prior
        self.feature_log_prob = feature_log_prob

    def joint_log_likelihood(self, X) -> np.ndarray:
        return self._joint(self._check(X))

    def predict_proba(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        return np.exp(jll - logsumexp(jll, axis=1, keepdims=True))

    def _positive_score(self, X):
        jll = self._joint(X)
        return np.exp(jll[:, 1] - logsumexp(jll, axis=1))

    def predict(self, X):
        # argmax of the joint likelihood; ties go to classes[0]
        jll = self.joint_log_likelihood(X)
        return self.classes[(jll[:, 1] > jll[:, 0]).astype(np.int64)]


class MultinomialNB(_NaiveBayes):
    kind = "MNB"

    def _joint(self, X):
        return np.asarray(X @ self.feature_log_prob.T) + self.class_log_prior


class BernoulliNB(_NaiveBayes):
    kind = "BNB"

    def __init__(self, classes, class_log_prior, feature_log_prob, neg_log_prob):
        super().__init__(classes, class_log_prior, feature_log_prob)
        self.neg_log_prob = neg_log_prob

    def _joint(self, X):
        Xb = X.copy()
        Xb.data = (Xb.data > 0).astype(np.float64)
        Xb.eliminate_zeros()
        delta = self.feature_log_prob - self.neg_log_prob
        return np.asarray(Xb @ delta.T) + self.neg_log_prob.sum(axis=1) + self.class_log_prior


def train_mnb(X, y, alpha: float = 0.01, weights: dict | None = None) -> MultinomialNB:
    """Multinomial NB; fractional counts (e.g. synthetic rows) are accepted."""
    X = as_csr(X)
    if X.nnz and X.data.min() < 0:
        raise ValueError("MNB: negative feature values are not allowed")
    classes, y01 = check_binary(y, "MNB")
    counts, n_c = _class_sums(X, y01)
    smoothed = counts + alpha
    flp = np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))
    model = MultinomialNB(classes, np.log(n_c / n_c.sum()), flp)
    _ignore_weights("MNB", weights, model)
    return model


def train_bnb(X, y, alpha: float = 0.01, weights: dict | None = None) -> BernoulliNB:
    """Bernoulli NB on feature presence (value > 0)."""
    X = as_csr(X)
    classes, y01 = check_binary(y, "BNB")
    Xb = X.copy()
    Xb.data = (Xb.data > 0).astype(np.float64)
    counts, n_c = _class_sums(Xb, y01)
    p = (counts + alpha) / (n_c[:, None] + 2.0 * alpha)
    model = BernoulliNB(classes, np.log(n_c / n_c.sum()), np.log(p), np.log1p(-p))
    _ignore_weights("BNB", weights, model)
    return model
