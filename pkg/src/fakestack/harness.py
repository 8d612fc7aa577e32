"""End-to-end experiment runs, method sweeps and report writers."""
from __future__ import annotations

import csv
import io
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import classify, resample, stack, vectorize
from .corpus import (CLASSIFIERS, OVERSAMPLERS, UNDERSAMPLERS, ExperimentConfig, LabeledDataset,
                     load_corpus, split_indices)
from .evaluate import MetricsReport, evaluate, minority_label
from .text import load_stemmer, load_stopwords, preprocess_all

logger = logging.getLogger(__name__)

METHOD_NAMES = {
    "baseline": "Baseline",
    "random_over": "Random Oversampling",
    "smote": "SMOTE",
    "adasyn": "ADASYN",
    "random_under": "Random Undersampling",
    "nearmiss": "Near-Miss",
    "class_weight": "Modifying Class-Weight",
    "stacking": "Model Stacking",
}
SWEEP_METHODS = ("baseline", "random_over", "smote", "adasyn", "random_under", "nearmiss", "class_weight")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


def method_row(cfg: ExperimentConfig) -> str:
    """Report row label; oversampling runs scored on an untouched test split get "(N)"."""
    name = METHOD_NAMES[cfg.method]
    if cfg.method in OVERSAMPLERS and not cfg.oversample_test:
        name += " (N)"
    return name


@dataclass
class RunResult:
    config: dict
    status: str
    metrics: MetricsReport | None = None
    timing: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)
    error: str = ""
    exception: BaseException | None = field(default=None, repr=False, compare=False)

    @property
    def f1(self) -> float:
        return self.metrics.f1 if self.metrics is not None else float("nan")

    def row(self) -> dict:
        """Machine-readable record (timing excluded so reports are reproducible)."""
        cfg = self.config
        m = self.metrics
        return {
            "method_row": method_row(ExperimentConfig(**cfg)),
            "method": cfg["method"],
            "vectorizer": cfg["vectorizer"],
            "classifier": cfg["classifier"],
            "oversample_test": cfg["oversample_test"] if cfg["method"] in OVERSAMPLERS else False,
            "seed": cfg["seed"],
            "status": self.status,
            "accuracy": None if m is None else round(m.accuracy, 6),
            "precision": None if m is None else round(m.precision, 6),
            "recall": None if m is None else round(m.recall, 6),
            "f1": None if m is None else round(m.f1, 6),
            "positive_class": None if m is None else m.positive_class,
            "degenerate": [] if m is None else list(m.degenerate),
            "counts": self.counts,
            "warnings": list(self.warnings),
            "error": self.error,
        }


@dataclass
class SweepReport:
    runs: list[RunResult]

    def summary(self) -> list[dict]:
        """Best classifier per (method row, vectorizer) by F1; earlier runs win ties."""
        best: dict[tuple, RunResult] = {}
        order: list[tuple] = []
        for r in self.runs:
            key = (method_row(ExperimentConfig(**r.config)), r.config["vectorizer"])
            if key not in order:
                order.append(key)
            if r.status != "ok":
                continue
            if key not in best or r.f1 > best[key].f1:
                best[key] = r
        rows = []
        for key in order:
            if key in best:
                r = best[key]
                rows.append({"method_row": key[0], "vectorizer": key[1], "classifier": r.config["classifier"],
                             "f1": round(r.f1, 6)})
        return rows

    def to_json(self) -> str:
        payload = {"runs": [r.row() for r in self.runs], "summary": self.summary()}
        return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        cols = ["method_row", "method", "vectorizer", "classifier", "oversample_test", "seed", "status",
                "accuracy", "precision", "recall", "f1", "positive_class", "warnings", "error"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.runs:
            row = r.row()
            row["warnings"] = "; ".join(row["warnings"])
            w.writerow(["" if row[c] is None else row[c] for c in cols])
        return buf.getvalue()

    def to_table(self) -> str:
        head = ["Method", "Features", "Classifier", "Acc", "Prec", "Rec", "F1", "Status"]
        body = []
        for r in self.runs:
            m = r.metrics
            nums = ["-"] * 4 if m is None else [f"{m.accuracy:.3f}", f"{m.precision:.3f}", f"{m.recall:.3f}",
                                                 f"{m.f1:.3f}"]
            body.append([method_row(ExperimentConfig(**r.config)), r.config["vectorizer"],
                         r.config["classifier"], *nums, r.status])
        lines = [_align([head] + body)]
        summary = self.summary()
        if summary:
            lines.append("")
            lines.append("Best classifier per method:")
            lines.append(_align([["Method", "Features", "Classifier", "F1"]] +
                                [[s["method_row"], s["vectorizer"], s["classifier"], f"{s['f1']:.3f}"]
                                 for s in summary]))
        flagged = [r for r in self.runs if r.config.get("oversample_test") and r.config["method"] in OVERSAMPLERS]
        if flagged:
            lines.append("")
            lines.append("NOTE: rows without (N) were scored on an oversampled test set; their metrics are inflated.")
        return "\n".join(lines) + "\n"

    def timings_json(self) -> str:
        return json.dumps([{"config": r.config, "timing": r.timing} for r in self.runs], indent=2) + "\n"

    def write(self, out_dir: str | Path, stem: str = "report") -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{stem}.json").write_text(self.to_json(), encoding="utf-8")
        (out / f"{stem}.csv").write_text(self.to_csv(), encoding="utf-8")
        (out / f"{stem}.timings.json").write_text(self.timings_json(), encoding="utf-8")


def _align(rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(rows[0]))]
    fmt = lambda r: "  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip()
    return "\n".join([fmt(rows[0]), "  ".join("-" * w for w in widths)] + [fmt(r) for r in rows[1:]])


class _Timer(dict):
    @contextmanager
    def stage(self, name):
        t0 = time.perf_counter()
        try:
            yield
        except StageError:
            raise
        except Exception as exc:
            raise StageError(name, exc) from exc
        finally:
            self[name] = self.get(name, 0.0) + time.perf_counter() - t0


@dataclass
class Features:
    X_train: object
    y_train: np.ndarray
    X_test: object
    y_test: np.ndarray
    positive: int
    counts: dict
    warnings: list


_FEATURE_KEYS = ("method", "vectorizer", "split_ratio", "oversample_test", "seed", "stratified", "ngram_lo",
                 "ngram_hi", "count_ngrams", "k_neighbors", "nearmiss_version", "nearmiss_k3", "beta",
                 "undersample_scope")


def _class_counts(y) -> dict:
    y = np.asarray(y)
    return {"0": int(np.sum(y == 0)), "1": int(np.sum(y == 1))}


class Pipeline:
    """Preprocessed corpus plus a cache of prepared train/test features.

    Runs that differ only in classifier settings share one split,
    vectorization and resampling pass.
    """

    def __init__(self, dataset: LabeledDataset, cfg: ExperimentConfig, timer: _Timer | None = None):
        timer = timer if timer is not None else _Timer()
        with timer.stage("preprocess"):
            stops = load_stopwords(cfg.stopwords or None)
            stemmer = load_stemmer(cfg.stem_rules or None)
            self.docs = preprocess_all(dataset.records, stops, stemmer)
        self.dataset = dataset
        self.labels = dataset.labels
        self.preprocess_seconds = timer.get("preprocess", 0.0)
        self._cache: dict[tuple, Features] = {}

    @classmethod
    def from_path(cls, corpus: str | Path | Sequence, cfg: ExperimentConfig, timer=None) -> "Pipeline":
        timer = timer if timer is not None else _Timer()
        with timer.stage("load"):
            paths = [corpus] if isinstance(corpus, (str, Path)) else list(corpus)
            schema = {"content": cfg.content_col, "label": cfg.label_col}
            dataset = LabeledDataset.concat([
                load_corpus(p, schema, cfg.delimiter, cfg.aliases()) for p in paths
            ])
        return cls(dataset, cfg, timer)

    def _ngram_range(self, cfg, kind):
        return cfg.ngram_range if (kind == "tfidf" or cfg.count_ngrams) else (1, 1)

    def _vectorize(self, cfg, train_docs, test_docs, timer):
        with timer.stage("vectorize"):
            vocab = vectorize.fit(train_docs, cfg.vectorizer, self._ngram_range(cfg, cfg.vectorizer))
            size_before = len(vocab)
            train = vectorize.transform(train_docs, vocab)
            test = vectorize.transform(test_docs, vocab)
            if len(vocab) != size_before:
                raise AssertionError("vocabulary changed while transforming the test split")
        return train, test, len(vocab)

    def features(self, cfg: ExperimentConfig, timer: _Timer) -> Features:
        key = tuple(getattr(cfg, k) for k in _FEATURE_KEYS)
        if key not in self._cache:
            self._cache[key] = self._build(cfg, timer)
        return self._cache[key]

    def _split_indices(self, rows, cfg, timer):
        with timer.stage("split"):
            tr, te = split_indices(self.labels[rows], cfg.train_fraction, cfg.seed, cfg.stratified)
            return rows[tr], rows[te]

    def _build(self, cfg: ExperimentConfig, timer: _Timer) -> Features:
        warnings: list[str] = []
        counts: dict = {}
        all_idx = np.arange(len(self.docs))
        plan = resample.ResamplePlan(
            cfg.method if cfg.method in resample.METHODS else "smote",
            cfg.k_neighbors, cfg.nearmiss_version, cfg.nearmiss_k3, cfg.beta, cfg.seed,
        )
        if cfg.method in UNDERSAMPLERS and cfg.undersample_scope == "corpus":
            # whole corpus is undersampled first, then split (the test split is balanced too)
            with timer.stage("resample"):
                counts["corpus_before"] = _class_counts(self.labels)
                minority, *_ = resample.class_roles(self.labels)
                if cfg.method == "random_under":
                    kept_major = resample.undersample_selection(self.labels, cfg.seed)
                else:
                    # selection-only features; the model's vocabulary is refit on the train split below
                    sel_vocab = vectorize.fit(self.docs, cfg.vectorizer, self._ngram_range(cfg, cfg.vectorizer))
                    sel = vectorize.transform(self.docs, sel_vocab)
                    kept_major = resample.nearmiss_selection(sel.X, self.labels, cfg.nearmiss_version,
                                                             cfg.k_neighbors, cfg.nearmiss_k3)
                keep = np.sort(np.concatenate([np.flatnonzero(self.labels == minority), kept_major]))
                counts["corpus_after"] = _class_counts(self.labels[keep])
            tr_idx, te_idx = self._split_indices(keep, cfg, timer)
        else:
            tr_idx, te_idx = self._split_indices(all_idx, cfg, timer)

        train_docs = [self.docs[i] for i in tr_idx]
        test_docs = [self.docs[i] for i in te_idx]
        counts["train_before"] = _class_counts(self.labels[tr_idx])
        counts["test_before"] = _class_counts(self.labels[te_idx])
        positive = minority_label(self.labels[tr_idx], fallback=self.labels)
        train, test, vocab_size = self._vectorize(cfg, train_docs, test_docs, timer)
        counts["vocabulary"] = vocab_size
        Xtr, ytr, Xte, yte = train.X, train.y, test.X, test.y

        if cfg.method in OVERSAMPLERS or (cfg.method in UNDERSAMPLERS and cfg.undersample_scope == "train"):
            with timer.stage("resample"):
                Xtr, ytr = resample.resample(Xtr, ytr, plan)
                if cfg.method in OVERSAMPLERS and cfg.oversample_test:
                    test_plan = resample.ResamplePlan(plan.method, plan.k_neighbors, plan.nearmiss_version,
                                                      plan.nearmiss_k3, plan.beta, cfg.seed + 1)
                    Xte, yte = resample.resample(Xte, yte, test_plan)
                    warnings.append("test split oversampled: metrics are inflated relative to untouched test data")
        counts["train"] = _class_counts(ytr)
        counts["test"] = _class_counts(yte)
        return Features(Xtr, ytr, Xte, yte, positive, counts, warnings)


def _fit_predict(cfg: ExperimentConfig, feats: Features, timer: _Timer, warnings: list) -> np.ndarray:
    with timer.stage("train"):
        if cfg.method == "stacking":
            spec = stack.StackSpec.from_config(cfg)
            model = stack.train_stack(spec, feats.X_train, feats.y_train)
        else:
            weights = classify.balanced_class_weights(feats.y_train) if cfg.method == "class_weight" else None
            model = classify.train(cfg.classifier, feats.X_train, feats.y_train, cfg, weights=weights)
        warnings.extend(model.warnings)
    with timer.stage("predict"):
        return model.predict(feats.X_test)


def _run(cfg: ExperimentConfig, pipeline: Pipeline, timer: _Timer | None = None) -> RunResult:
    timer = timer if timer is not None else _Timer()
    warnings: list[str] = []
    snapshot = cfg.snapshot()
    try:
        feats = pipeline.features(cfg, timer)
        warnings.extend(feats.warnings)
        if cfg.method != "stacking" and cfg.classifier == "SVM" and cfg.svm_max_rows is not None \
                and feats.X_train.shape[0] > cfg.svm_max_rows:
            msg = (f"SVM skipped: {feats.X_train.shape[0]} training rows exceed the "
                   f"{cfg.svm_max_rows}-row cap")
            logger.warning(msg)
            return RunResult(snapshot, "skipped", None, dict(timer), warnings + [msg], feats.counts)
        y_pred = _fit_predict(cfg, feats, timer, warnings)
        with timer.stage("evaluate"):
            report = evaluate(feats.y_test, y_pred, feats.positive)
        return RunResult(snapshot, "ok", report, dict(timer), warnings, feats.counts)
    except StageError as exc:
        logger.error("%s", exc)
        return RunResult(snapshot, "failed", None, dict(timer), warnings, {}, str(exc), exc)


def run_experiment(config: ExperimentConfig, corpus, pipeline: Pipeline | None = None) -> RunResult:
    """load -> preprocess -> split -> vectorize -> resample -> train -> evaluate.

    ``corpus`` is a path, a list of paths or a LabeledDataset.  Any stage
    failure raises StageError naming the stage.
    """
    timer = _Timer()
    if pipeline is None:
        pipeline = _pipeline(corpus, config, timer)
    result = _run(config, pipeline, timer)
    if result.exception is not None:
        raise result.exception
    return result


def _pipeline(corpus, cfg, timer=None) -> Pipeline:
    if isinstance(corpus, Pipeline):
        return corpus
    if isinstance(corpus, LabeledDataset):
        return Pipeline(corpus, cfg, timer)
    return Pipeline.from_path(corpus, cfg, timer)


def sweep_configs(base: ExperimentConfig, methods: Iterable[str], vectorizers: Iterable[str],
                  classifiers: Iterable[str], both_test_protocols: bool = True) -> list[ExperimentConfig]:
    """Config grid in report order; oversamplers expand into "(N)" and oversampled-test rows."""
    out = []
    for method in methods:
        variants = [False, True] if (method in OVERSAMPLERS and both_test_protocols) else [base.oversample_test]
        for ot in variants:
            for vec in vectorizers:
                for clf in classifiers:
                    out.append(base.replace(method=method, vectorizer=vec, classifier=clf, oversample_test=ot))
    return out


def run_sweep(configs: Sequence[ExperimentConfig], corpus, base: ExperimentConfig | None = None) -> SweepReport:
    """Run every config; failures and skips are recorded and the sweep continues."""
    configs = list(configs)
    if not configs:
        return SweepReport([])
    base = base or configs[0]
    try:
        pipeline = _pipeline(corpus, base)
    except StageError as exc:
        return SweepReport([RunResult(c.snapshot(), "failed", error=str(exc)) for c in configs])
    return SweepReport([_run(c, pipeline) for c in configs])


def run_stacking_sweep(corpus, base: ExperimentConfig | None = None,
                       meta_kinds: Sequence[str] = CLASSIFIERS) -> SweepReport:
    """Each classifier in turn as the level-1 model over TF-IDF features.

    Level-0 out-of-fold scores and the full-data base models are computed
    once per distinct base roster and shared across the meta models.
    """
    base = (base or ExperimentConfig()).replace(method="stacking", vectorizer="tfidf")
    pipeline = _pipeline(corpus, base)
    results = []
    rosters: dict[tuple, tuple] = {}
    for meta_kind in meta_kinds:
        cfg = base.replace(classifier=meta_kind)
        timer = _Timer()
        warnings: list[str] = []
        try:
            feats = pipeline.features(cfg, timer)
            spec = stack.StackSpec.from_config(cfg, meta_kind)
            with timer.stage("train"):
                if spec.base_kinds not in rosters:
                    meta = stack.meta_features(spec, feats.X_train, feats.y_train)
                    bases = stack.fit_bases_full(spec, feats.X_train, feats.y_train)
                    rosters[spec.base_kinds] = (meta, bases)
                meta, bases = rosters[spec.base_kinds]
                meta_model = stack.train_meta(spec, meta, feats.y_train)
                model = stack.StackedModel(spec, bases, meta_model)
                warnings.extend(w for m in (*bases, meta_model) for w in m.warnings)
            with timer.stage("predict"):
                y_pred = model.predict(feats.X_test)
            with timer.stage("evaluate"):
                report = evaluate(feats.y_test, y_pred, feats.positive)
            results.append(RunResult(cfg.snapshot(), "ok", report, dict(timer), warnings, feats.counts))
        except StageError as exc:
            logger.error("%s", exc)
            results.append(RunResult(cfg.snapshot(), "failed", None, dict(timer), warnings, {}, str(exc)))
    return SweepReport(results)
