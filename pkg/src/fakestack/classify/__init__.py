"""The six classifiers, balanced class weights and a config-driven dispatcher."""
from __future__ import annotations

from .base import (TrainedModel, as_csr, balanced_class_weights, load_model, predict, save_model,
                   score)
from .bayes import BernoulliNB, MultinomialNB, train_bnb, train_mnb
from .linear import LogisticRegression, softmax_objective, train_logreg
from .svm import KernelSVM, RowCapExceeded, rbf_kernel, train_svm_rbf
from .tree import DecisionTree, RandomForest, Tree, train_dtree, train_rforest

KINDS = ("LR", "SVM", "MNB", "BNB", "RFC", "DTC")


def train(kind: str, X, y, cfg=None, weights: dict | None = None, seed: int | None = None) -> TrainedModel:
    """Train classifier ``kind`` with hyperparameters from ``cfg`` (an
    ExperimentConfig or anything with the same attribute names)."""
    from ..corpus import ExperimentConfig

    cfg = cfg or ExperimentConfig()
    seed = cfg.seed if seed is None else seed
    if kind == "LR":
        return train_logreg(X, y, weights, C=cfg.lr_C, max_iter=cfg.lr_max_iter)
    if kind == "SVM":
        return train_svm_rbf(X, y, gamma=cfg.svm_gamma, C=cfg.svm_C, weights=weights, max_rows=cfg.svm_max_rows)
    if kind == "MNB":
        return train_mnb(X, y, alpha=cfg.nb_alpha, weights=weights)
    if kind == "BNB":
        return train_bnb(X, y, alpha=cfg.nb_alpha, weights=weights)
    if kind == "DTC":
        return train_dtree(X, y, weights, max_depth=cfg.dt_max_depth, seed=seed)
    if kind == "RFC":
        return train_rforest(X, y, weights, n_estimators=cfg.rf_n_estimators,
                             max_features=cfg.rf_max_features, seed=seed)
    raise ValueError(f"unknown classifier {kind!r}; choose from {KINDS}")


__all__ = [
    "KINDS", "TrainedModel", "train", "predict", "score", "save_model", "load_model", "as_csr",
    "balanced_class_weights", "train_logreg", "train_svm_rbf", "train_mnb", "train_bnb", "train_dtree",
    "train_rforest", "LogisticRegression", "KernelSVM", "MultinomialNB", "BernoulliNB", "DecisionTree",
    "RandomForest", "Tree", "RowCapExceeded", "rbf_kernel", "softmax_objective",
]
