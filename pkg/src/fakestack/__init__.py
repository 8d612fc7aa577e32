"""Fake-news classification on imbalanced Bangla text: preprocessing,
n-gram features, resampling, six classifiers, stacking and a sweep harness."""
from ._backend import BACKEND
from .corpus import (CorpusError, ExperimentConfig, LabeledDataset, RawArticle, load_config, load_corpus,
                     split)
from .evaluate import Confusion, MetricsReport, confusion, evaluate, metrics
from .harness import RunResult, StageError, SweepReport, run_experiment, run_stacking_sweep, run_sweep
from .resample import ResamplePlan, adasyn, knn, nearmiss, random_oversample, random_undersample, smote
from .stack import StackSpec, meta_features, train_stack
from .synth import synthetic_corpus
from .text import preprocess, preprocess_all
from .vectorize import FeatureMatrix, Vocabulary, fit_count, fit_tfidf, transform_count, transform_tfidf

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CorpusError", "ExperimentConfig", "LabeledDataset", "RawArticle", "load_config", "load_corpus",
    "split", "Confusion", "MetricsReport", "confusion", "evaluate", "metrics", "RunResult", "StageError",
    "SweepReport", "run_experiment", "run_stacking_sweep", "run_sweep", "ResamplePlan", "adasyn", "knn",
    "nearmiss", "random_oversample", "random_undersample", "smote", "StackSpec", "meta_features",
    "train_stack", "synthetic_corpus", "preprocess", "preprocess_all", "FeatureMatrix", "Vocabulary",
    "fit_count", "fit_tfidf", "transform_count", "transform_tfidf",
]
