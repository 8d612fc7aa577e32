"""Corpus ingestion, seeded train/test splitting and experiment configuration."""
from __future__ import annotations

import csv
import dataclasses
import logging
import math
import sys
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

AUTHENTIC, FAKE = 0, 1

# Column names used by the public BanFakeNews distribution.
DEFAULT_SCHEMA = {
    "id": "articleID",
    "headline": "headline",
    "content": "content",
    "source": "source",
    "domain": "domain",
    "date": "date",
    "category": "category",
    "label": "label",
}
MANDATORY_FIELDS = ("content", "label")

DEFAULT_LABEL_ALIASES = {
    "0": AUTHENTIC,
    "1": FAKE,
    "authentic": AUTHENTIC,
    "real": AUTHENTIC,
    "true": AUTHENTIC,
    "fake": FAKE,
    "false": FAKE,
}


class CorpusError(ValueError):
    """Raised when a corpus file cannot be read under the given schema."""


@dataclass(frozen=True)
class RawArticle:
    id: str
    content: str
    label: int
    headline: str = ""
    source: str = ""
    domain: str = ""
    date: str = ""
    category: str = ""

    def __post_init__(self):
        if self.label not in (AUTHENTIC, FAKE):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")

    @property
    def is_empty(self) -> bool:
        return not self.content.strip()


@dataclass(frozen=True)
class LabeledDataset:
    """An immutable, ordered collection of labelled articles.

    ``rejected`` keeps ``(row_number, reason)`` diagnostics for rows that
    were dropped at ingest.
    """

    records: tuple[RawArticle, ...]
    rejected: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "rejected", tuple(self.rejected))

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def class_counts(self) -> dict[int, int]:
        counts = Counter(r.label for r in self.records)
        return {AUTHENTIC: counts.get(AUTHENTIC, 0), FAKE: counts.get(FAKE, 0)}

    @property
    def labels(self) -> np.ndarray:
        return np.fromiter((r.label for r in self.records), dtype=np.int64, count=len(self.records))

    @property
    def missing_classes(self) -> list[int]:
        return [c for c, n in self.class_counts.items() if n == 0]

    @property
    def empty_ids(self) -> list[str]:
        """Ids of articles whose content is blank (kept, but flagged)."""
        return [r.id for r in self.records if r.is_empty]

    def subset(self, indices: Iterable[int]) -> "LabeledDataset":
        return LabeledDataset(tuple(self.records[i] for i in indices))

    @classmethod
    def concat(cls, parts: Sequence["LabeledDataset"]) -> "LabeledDataset":
        records: list[RawArticle] = []
        rejected: list[tuple[int, str]] = []
        for p in parts:
            records.extend(p.records)
            rejected.extend(p.rejected)
        return cls(tuple(records), tuple(rejected))


def _normalize_label(raw: str, aliases: Mapping[str, int]) -> int | None:
    key = raw.strip().lower()
    if key in aliases:
        return aliases[key]
    # "1.0" style numerics exported by spreadsheet tools
    try:
        as_float = float(key)
    except ValueError:
        return None
    if as_float.is_integer():
        return aliases.get(str(int(as_float)))
    return None


def load_corpus(
    path: str | Path,
    schema: Mapping[str, str] | None = None,
    delimiter: str = ",",
    label_aliases: Mapping[str, int] | None = None,
) -> LabeledDataset:
    """Read a UTF-8 delimited corpus file with a header row.

    ``schema`` maps RawArticle field names to column names; only ``content``
    and ``label`` are mandatory.  ``label_aliases`` extend (and override) the
    default label spellings, so ``{"1": 0, "0": 1}`` flips a corpus that
    marks authentic news as 1.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"corpus file not found: {path}")
    columns = dict(DEFAULT_SCHEMA)
    if schema:
        columns.update(schema)
    aliases = dict(DEFAULT_LABEL_ALIASES)
    if label_aliases:
        aliases.update({str(k).strip().lower(): int(v) for k, v in label_aliases.items()})

    csv.field_size_limit(min(sys.maxsize, 2**31 - 1))
    records: list[RawArticle] = []
    rejected: list[tuple[int, str]] = []
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter, strict=True)
        try:
            header = next(reader, None)
            if header is None:
                raise CorpusError(f"{path}: empty file, header row required")
            header = [h.strip().lstrip("﻿") for h in header]
            missing = [f for f in MANDATORY_FIELDS if columns[f] not in header]
            if missing:
                raise CorpusError(
                    f"{path}: missing mandatory column(s) "
                    + ", ".join(f"{columns[f]!r} (for {f})" for f in missing)
                )
            position = {f: header.index(c) for f, c in columns.items() if c in header}
            for row in reader:
                row_no = reader.line_num
                if not row:
                    continue
                if len(row) != len(header):
                    rejected.append((row_no, f"expected {len(header)} fields, got {len(row)}"))
                    continue
                label = _normalize_label(row[position["label"]], aliases)
                if label is None:
                    rejected.append((row_no, f"unmappable label {row[position['label']]!r}"))
                    continue
                values = {f: row[i] for f, i in position.items() if f != "label"}
                values.setdefault("id", str(row_no))
                records.append(RawArticle(label=label, **values))
        except csv.Error as exc:
            raise CorpusError(f"{path}: malformed row near line {reader.line_num}: {exc}") from exc

    for row_no, reason in rejected:
        logger.warning("%s: row %d rejected: %s", path, row_no, reason)
    dataset = LabeledDataset(tuple(records), tuple(rejected))
    if dataset.empty_ids:
        logger.info("%s: %d article(s) with empty content", path, len(dataset.empty_ids))
    return dataset


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_train_counts(class_sizes: Mapping[int, int], train_fraction: float) -> dict[int, int]:
    """Per-class train sizes: each class gets round(n_c * f), the largest class
    absorbs the remainder so the total equals round(N * f)."""
    total = _round_half_up(sum(class_sizes.values()) * train_fraction)
    if not class_sizes:
        return {}
    # largest class, lowest label on ties
    largest = max(sorted(class_sizes), key=lambda c: class_sizes[c])
    counts = {c: _round_half_up(n * train_fraction) for c, n in class_sizes.items() if c != largest}
    counts[largest] = min(class_sizes[largest], max(0, total - sum(counts.values())))
    return counts


_warned_empty_class = False


def split_indices(
    labels,
    train_fraction: float,
    seed: int,
    stratified: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded train/test row ids (each ascending) for a label vector."""
    global _warned_empty_class
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    chosen: list[np.ndarray] = []
    if stratified:
        sizes = {c: int(np.sum(labels == c)) for c in (AUTHENTIC, FAKE)}
        missing = [c for c, n in sizes.items() if n == 0]
        if missing and not _warned_empty_class:
            logger.warning("stratified split: class(es) %s have no records", missing)
            _warned_empty_class = True
        counts = stratified_train_counts(sizes, train_fraction)
        for c in (AUTHENTIC, FAKE):
            members = np.flatnonzero(labels == c)
            chosen.append(rng.permutation(members)[: counts[c]])
    else:
        n_train = _round_half_up(len(labels) * train_fraction)
        chosen.append(rng.permutation(len(labels))[:n_train])
    train_mask = np.zeros(len(labels), dtype=bool)
    for idx in chosen:
        train_mask[idx] = True
    return np.flatnonzero(train_mask), np.flatnonzero(~train_mask)


def split(
    dataset: LabeledDataset,
    train_fraction: float,
    seed: int,
    stratified: bool = True,
) -> tuple[LabeledDataset, LabeledDataset]:
    """Seeded train/test partition; both halves keep the dataset's row order."""
    tr, te = split_indices(dataset.labels, train_fraction, seed, stratified)
    return dataset.subset(tr), dataset.subset(te)


METHODS = ("baseline", "random_over", "smote", "adasyn", "random_under", "nearmiss", "class_weight", "stacking")
OVERSAMPLERS = ("random_over", "smote", "adasyn")
UNDERSAMPLERS = ("random_under", "nearmiss")
VECTORIZERS = ("count", "tfidf")
CLASSIFIERS = ("LR", "SVM", "MNB", "BNB", "RFC", "DTC")


@dataclass(frozen=True)
class ExperimentConfig:
    method: str = "baseline"
    vectorizer: str = "tfidf"
    classifier: str = "LR"
    # None picks the protocol default: 0.7 for oversamplers, 0.8 otherwise
    split_ratio: float | None = None
    oversample_test: bool = False
    seed: int = 42
    stratified: bool = True

    # corpus
    content_col: str = "content"
    label_col: str = "label"
    delimiter: str = ","
    label_aliases: str = ""
    stopwords: str = ""
    stem_rules: str = ""

    # features
    ngram_lo: int = 1
    ngram_hi: int = 2
    count_ngrams: bool = True

    # resampling
    k_neighbors: int = 5
    nearmiss_version: int = 1
    nearmiss_k3: int = 3
    beta: float = 1.0
    undersample_scope: str = "corpus"

    # classifiers
    lr_C: float = 1.0
    lr_max_iter: int = 1000
    svm_gamma: float = 1.0
    svm_C: float = 1.0
    svm_max_rows: int = 20000
    nb_alpha: float = 0.01
    rf_n_estimators: int = 400
    rf_max_features: str = "sqrt"
    dt_max_depth: int = 6

    # stacking
    stack_folds: int = 5
    stack_meta_in_base: bool = True
    stack_use_labels: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.vectorizer not in VECTORIZERS:
            raise ValueError(f"unknown vectorizer {self.vectorizer!r}; choose from {VECTORIZERS}")
        if self.classifier not in CLASSIFIERS:
            raise ValueError(f"unknown classifier {self.classifier!r}; choose from {CLASSIFIERS}")
        if self.split_ratio is not None and not 0.0 < self.split_ratio < 1.0:
            raise ValueError(f"split_ratio must lie in (0, 1), got {self.split_ratio}")
        if self.ngram_lo < 1 or self.ngram_hi < self.ngram_lo:
            raise ValueError(f"invalid ngram range ({self.ngram_lo}, {self.ngram_hi})")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if self.nearmiss_version not in (1, 2, 3):
            raise ValueError("nearmiss_version must be 1, 2 or 3")
        if self.undersample_scope not in ("corpus", "train"):
            raise ValueError("undersample_scope must be 'corpus' or 'train'")
        if self.oversample_test and self.method not in OVERSAMPLERS:
            logger.debug("oversample_test has no effect for method %s", self.method)

    @property
    def train_fraction(self) -> float:
        if self.split_ratio is not None:
            return self.split_ratio
        return 0.7 if self.method in OVERSAMPLERS else 0.8

    @property
    def ngram_range(self) -> tuple[int, int]:
        return (self.ngram_lo, self.ngram_hi)

    def aliases(self) -> dict[str, int]:
        """Parse ``label_aliases`` written as ``raw:label,raw:label``."""
        out = {}
        for part in filter(None, (p.strip() for p in self.label_aliases.split(","))):
            raw, _, value = part.rpartition(":")
            if not raw:
                raise ValueError(f"bad label alias {part!r}, expected raw:label")
            out[raw] = int(value)
        return out

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def snapshot(self) -> dict:
        return dataclasses.asdict(self)


def _coerce(name: str, raw: str):
    fld = {f.name: f for f in dataclasses.fields(ExperimentConfig)}.get(name)
    if fld is None:
        raise ValueError(f"unknown config key {name!r}")
    kind = str(fld.type)
    raw = raw.strip()
    if kind.startswith("bool"):
        lowered = raw.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {raw!r}")
    if kind.startswith("float"):
        return None if raw.lower() in ("", "none", "auto") else float(raw)
    if kind.startswith("int"):
        return int(raw)
    if raw[:1] == raw[-1:] and raw[:1] in ("'", '"') and len(raw) >= 2:
        return raw[1:-1]
    return raw


def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment line."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"config line {lineno}: expected key = value, got {line!r}")
        key = key.strip().replace("-", "_")
        values[key] = _coerce(key, value)
    return values


def load_config(path: str | Path | None = None, **overrides) -> ExperimentConfig:
    values = parse_config_text(Path(path).read_text(encoding="utf-8")) if path else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)
