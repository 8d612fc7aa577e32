from __future__ import annotations

import logging
import pickle
from pathlib import Path

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1


def as_csr(X) -> sp.csr_matrix:
    """Canonical float64 CSR with sorted, de-duplicated int64 indices."""
    if sp.issparse(X):
        X = sp.csr_matrix(X, dtype=np.float64)
    else:
        X = sp.csr_matrix(np.atleast_2d(np.asarray(X, dtype=np.float64)))
    X.sum_duplicates()
    X.sort_indices()
    if X.indices.dtype != np.int64:
        X.indices = X.indices.astype(np.int64)
        X.indptr = X.indptr.astype(np.int64)
    return X


def check_binary(y, kind: str) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(classes, y01)`` where ``y01`` indexes into ``classes``."""
    y = np.asarray(y)
    classes = np.unique(y)
    if len(classes) != 2:
        raise ValueError(f"{kind} needs exactly two classes in the training labels, got {classes.tolist()}")
    return classes, (y == classes[1]).astype(np.int64)


def balanced_class_weights(y) -> dict:
    """``N / (K * n_c)`` for each class present in ``y``."""
    labels, counts = np.unique(np.asarray(y), return_counts=True)
    if len(labels) == 0:
        raise ValueError("balanced_class_weights: empty label vector")
    n, k = counts.sum(), len(labels)
    return {int(c): float(n / (k * nc)) for c, nc in zip(labels, counts)}


def sample_weights(y, class_weights: dict | None) -> np.ndarray:
    y = np.asarray(y)
    if class_weights is None:
        return np.ones(len(y))
    missing = set(np.unique(y).tolist()) - set(class_weights)
    if missing:
        raise ValueError(f"class weights missing for label(s) {sorted(missing)}")
    if any(w <= 0 for w in class_weights.values()):
        raise ValueError("class weights must be positive")
    return np.array([class_weights[int(v)] for v in y], dtype=np.float64)


class TrainedModel:
    """Common surface of the fitted classifiers.

    Subclasses implement ``_positive_score`` (and ``predict_proba`` where a
    probability model exists); ``predict`` thresholds the score.
    """

    kind = "?"
    threshold = 0.5

    def __init__(self, classes, n_features: int):
        self.classes = np.asarray(classes)
        self.n_features = int(n_features)
        self.warnings: list[str] = []

    def _check(self, X) -> sp.csr_matrix:
        X = as_csr(X)
        if X.shape[1] != self.n_features:
            raise ValueError(
                f"{self.kind}: input has {X.shape[1]} features but the model was trained on {self.n_features}"
            )
        return X

    def _positive_score(self, X: sp.csr_matrix) -> np.ndarray:
        raise NotImplementedError

    def score(self, X) -> np.ndarray:
        """Real-valued score for ``classes[1]``."""
        return self._positive_score(self._check(X))

    def predict(self, X) -> np.ndarray:
        return self.classes[(self.score(X) > self.threshold).astype(np.int64)]


def predict(model: TrainedModel, X) -> np.ndarray:
    return model.predict(X)


def score(model: TrainedModel, X) -> np.ndarray:
    return model.score(X)


def save_model(model: TrainedModel, path: str | Path) -> None:
    with Path(path).open("wb") as fh:
        pickle.dump({"format": MODEL_FORMAT_VERSION, "model": model}, fh, protocol=pickle.HIGHEST_PROTOCOL)


def load_model(path: str | Path) -> TrainedModel:
    with Path(path).open("rb") as fh:
        payload = pickle.load(fh)
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported model file format")
    return payload["model"]
