"""Two-level stacked generalization with out-of-fold level-0 scores."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import classify
from .classify.base import TrainedModel, as_csr
from .corpus import ExperimentConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StackSpec:
    base_kinds: tuple[str, ...] = classify.KINDS
    meta_kind: str = "RFC"
    n_folds: int = 5
    seed: int = 0
    # hyperparameters for every base and the meta model
    config: ExperimentConfig = field(default_factory=ExperimentConfig)
    use_labels: bool = False

    def __post_init__(self):
        if not self.base_kinds:
            raise ValueError("stacking needs at least one base model")
        for k in (*self.base_kinds, self.meta_kind):
            if k not in classify.KINDS:
                raise ValueError(f"unknown classifier {k!r}")
        if self.n_folds < 2:
            raise ValueError("n_folds must be >= 2")

    @classmethod
    def from_config(cls, cfg: ExperimentConfig, meta_kind: str | None = None) -> "StackSpec":
        meta = meta_kind or cfg.classifier
        bases = classify.KINDS if cfg.stack_meta_in_base else tuple(k for k in classify.KINDS if k != meta)
        return cls(tuple(bases), meta, cfg.stack_folds, cfg.seed, cfg, cfg.stack_use_labels)


def stratified_folds(y, n_folds: int, seed: int) -> np.ndarray:
    """Fold id per row: each class is shuffled and dealt round-robin."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    folds = np.empty(len(y), dtype=np.int64)
    for label in np.unique(y):
        members = rng.permutation(np.flatnonzero(y == label))
        folds[members] = np.arange(len(members)) % n_folds
    return folds


def _check_folds(y, folds, n_folds):
    labels = np.unique(y)
    for f in range(n_folds):
        present = np.unique(y[folds != f])
        if len(present) < len(labels):
            raise ValueError(
                f"fold {f}: the training portion lacks class(es) "
                f"{sorted(set(labels.tolist()) - set(present.tolist()))}; use fewer folds"
            )


_META_STREAM = 1 << 20


def _seed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def fit_base(kind: str, X, y, spec: StackSpec, *seed_parts) -> TrainedModel:
    """Train one level-0 model; SVM is fitted on a uniform subsample when
    the rows exceed its cap."""
    cfg = spec.config
    seed = _seed(spec.seed, *seed_parts)
    if kind == "SVM" and cfg.svm_max_rows is not None and X.shape[0] > cfg.svm_max_rows:
        rng = np.random.default_rng(seed)
        keep = np.sort(rng.choice(X.shape[0], cfg.svm_max_rows, replace=False))
        logger.info("stacking: SVM base trained on %d of %d rows", len(keep), X.shape[0])
        X, y = X[keep], np.asarray(y)[keep]
    return classify.train(kind, X, y, cfg, seed=seed)


def meta_column(model: TrainedModel, X, use_labels: bool = False) -> np.ndarray:
    """Level-1 feature from one base model, always within [0, 1]."""
    if use_labels:
        return (model.predict(X) == model.classes[1]).astype(np.float64)
    s = model.score(X)
    # decision values are unbounded; squash so count-based metas (MNB) accept them
    return expit(s) if model.kind == "SVM" else s


def meta_features(spec: StackSpec, X, y, folds=None) -> np.ndarray:
    """Out-of-fold score matrix of shape (rows, len(spec.base_kinds))."""
    X, y = as_csr(X), np.asarray(y)
    folds = stratified_folds(y, spec.n_folds, spec.seed) if folds is None else np.asarray(folds)
    _check_folds(y, folds, spec.n_folds)
    out = np.empty((X.shape[0], len(spec.base_kinds)))
    for f in range(spec.n_folds):
        held = folds == f
        if not held.any():
            continue
        train_rows = np.flatnonzero(~held)
        for m, kind in enumerate(spec.base_kinds):
            model = fit_base(kind, X[train_rows], y[train_rows], spec, f, m)
            out[held, m] = meta_column(model, X[held], spec.use_labels)
    return out


@dataclass
class StackedModel:
    spec: StackSpec
    base_models: list[TrainedModel]
    meta_model: TrainedModel
    warnings: list[str] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.base_models[0].n_features

    def level1(self, X) -> np.ndarray:
        X = as_csr(X)
        if X.shape[1] != self.n_features:
            raise ValueError(f"stack: input has {X.shape[1]} features, base models expect {self.n_features}")
        return np.column_stack([meta_column(m, X, self.spec.use_labels) for m in self.base_models])

    def predict(self, X) -> np.ndarray:
        return self.meta_model.predict(self.level1(X))

    def score(self, X) -> np.ndarray:
        return self.meta_model.score(self.level1(X))


def fit_bases_full(spec: StackSpec, X, y) -> list[TrainedModel]:
    return [fit_base(kind, X, y, spec, spec.n_folds, m) for m, kind in enumerate(spec.base_kinds)]


def train_meta(spec: StackSpec, meta, y) -> TrainedModel:
    return classify.train(spec.meta_kind, meta, y, spec.config, seed=_seed(spec.seed, _META_STREAM))


def train_stack(spec: StackSpec, X, y, folds=None) -> StackedModel:
    X, y = as_csr(X), np.asarray(y)
    meta = meta_features(spec, X, y, folds)
    meta_model = train_meta(spec, meta, y)
    bases = fit_bases_full(spec, X, y)
    warnings = [w for m in (*bases, meta_model) for w in m.warnings]
    return StackedModel(spec, bases, meta_model, warnings)


def predict_stack(model: StackedModel, X) -> np.ndarray:
    return model.predict(X)
