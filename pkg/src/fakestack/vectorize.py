"""N-gram vocabularies and sparse count / TF-IDF feature matrices."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)


def ngrams(tokens: Sequence[str], ngram_range: tuple[int, int]) -> Iterator[str]:
    """Contiguous token windows for every n in ``ngram_range``, joined by a space."""
    lo, hi = ngram_range
    n_tok = len(tokens)
    for n in range(lo, hi + 1):
        if n == 1:
            yield from tokens
        else:
            for i in range(n_tok - n + 1):
                yield " ".join(tokens[i:i + n])


def _check_range(ngram_range):
    lo, hi = ngram_range
    if lo < 1 or hi < lo:
        raise ValueError(f"invalid ngram_range {ngram_range}")
    return int(lo), int(hi)


def _tokens(doc):
    return doc.tokens if hasattr(doc, "tokens") else doc


@dataclass(frozen=True)
class Vocabulary:
    """Column mapping for a fitted vectorizer.

    ``terms`` are sorted by code point and ``term_index`` maps each one to
    its column.  ``idf`` is present only for TF-IDF vocabularies.
    """

    terms: tuple[str, ...]
    ngram_range: tuple[int, int]
    n_docs: int
    idf: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "term_index", {t: i for i, t in enumerate(self.terms)})
        if self.idf is not None and len(self.idf) != len(self.terms):
            raise ValueError("idf length does not match vocabulary size")

    def __len__(self):
        return len(self.terms)

    @property
    def kind(self) -> str:
        return "count" if self.idf is None else "tfidf"

    def save(self, path: str | Path) -> None:
        lo, hi = self.ngram_range
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# kind={self.kind} ngram_range={lo},{hi} n_docs={self.n_docs}\n")
            for i, term in enumerate(self.terms):
                if self.idf is None:
                    fh.write(f"{term}\t{i}\t\n")
                else:
                    fh.write(f"{term}\t{i}\t{float(self.idf[i])!r}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        with Path(path).open(encoding="utf-8") as fh:
            header = fh.readline()
            if not header.startswith("#"):
                raise ValueError(f"{path}: missing vocabulary header")
            meta = dict(kv.split("=", 1) for kv in header[1:].split())
            lo, hi = (int(v) for v in meta["ngram_range"].split(","))
            terms, idf = [], []
            for lineno, line in enumerate(fh, 2):
                term, index, value = line.rstrip("\n").split("\t")
                if int(index) != len(terms):
                    raise ValueError(f"{path}:{lineno}: index {index} out of sequence")
                terms.append(term)
                if value:
                    idf.append(float(value))
        is_tfidf = meta.get("kind") == "tfidf"
        return cls(tuple(terms), (lo, hi), int(meta["n_docs"]),
                   np.asarray(idf, dtype=np.float64) if is_tfidf else None)


@dataclass(frozen=True)
class FeatureMatrix:
    """Sparse CSR feature rows with a parallel label vector."""

    X: sp.csr_matrix
    y: np.ndarray

    def __post_init__(self):
        if self.X.shape[0] != len(self.y):
            raise ValueError(f"{self.X.shape[0]} rows but {len(self.y)} labels")

    @property
    def rows(self) -> int:
        return self.X.shape[0]

    @property
    def cols(self) -> int:
        return self.X.shape[1]


def _document_frequencies(docs, ngram_range):
    df: dict[str, int] = {}
    n_docs = 0
    for doc in docs:
        n_docs += 1
        for term in set(ngrams(_tokens(doc), ngram_range)):
            df[term] = df.get(term, 0) + 1
    return df, n_docs


def fit_count(train_docs: Iterable, ngram_range: tuple[int, int] = (1, 2)) -> Vocabulary:
    ngram_range = _check_range(ngram_range)
    df, n_docs = _document_frequencies(train_docs, ngram_range)
    if not df:
        logger.warning("fit_count: empty vocabulary (%d documents)", n_docs)
    return Vocabulary(tuple(sorted(df)), ngram_range, n_docs)


def fit_tfidf(train_docs: Iterable, ngram_range: tuple[int, int] = (1, 2)) -> Vocabulary:
    """Vocabulary plus smoothed idf: ``ln((1 + n_docs) / (1 + df)) + 1``."""
    ngram_range = _check_range(ngram_range)
    df, n_docs = _document_frequencies(train_docs, ngram_range)
    if not df:
        logger.warning("fit_tfidf: empty vocabulary (%d documents)", n_docs)
    terms = tuple(sorted(df))
    counts = np.fromiter((df[t] for t in terms), dtype=np.float64, count=len(terms))
    idf = np.log((1.0 + n_docs) / (1.0 + counts)) + 1.0
    return Vocabulary(terms, ngram_range, n_docs, idf)


def _count_matrix(docs: Sequence, vocab: Vocabulary) -> sp.csr_matrix:
    index = vocab.term_index
    indptr = [0]
    indices: list[int] = []
    for doc in docs:
        cols = [j for j in map(index.get, ngrams(_tokens(doc), vocab.ngram_range)) if j is not None]
        indices.extend(cols)
        indptr.append(len(indices))
    data = np.ones(len(indices), dtype=np.float64)
    X = sp.csr_matrix(
        (data, np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(indptr) - 1, len(vocab)),
    )
    X.sum_duplicates()
    X.sort_indices()
    return X


def _labels(docs):
    return np.asarray([getattr(d, "label", 0) for d in docs], dtype=np.int64)


def transform_count(docs: Sequence, vocab: Vocabulary) -> FeatureMatrix:
    """Raw n-gram occurrence counts; out-of-vocabulary n-grams are dropped."""
    docs = list(docs)
    return FeatureMatrix(_count_matrix(docs, vocab), _labels(docs))


def l2_normalize_rows(X: sp.csr_matrix) -> sp.csr_matrix:
    X = X.tocsr(copy=True)
    sq = np.asarray(X.multiply(X).sum(axis=1)).ravel()
    norms = np.sqrt(sq)
    norms[norms == 0.0] = 1.0
    X.data /= np.repeat(norms, np.diff(X.indptr))
    return X


def transform_tfidf(docs: Sequence, vocab: Vocabulary) -> FeatureMatrix:
    """Count times idf, then each row scaled to unit L2 norm (zero rows stay zero)."""
    if vocab.idf is None:
        raise ValueError("vocabulary was fitted without idf; use fit_tfidf")
    docs = list(docs)
    X = _count_matrix(docs, vocab)
    X.data *= vocab.idf[X.indices]
    return FeatureMatrix(l2_normalize_rows(X), _labels(docs))


def fit(train_docs: Sequence, kind: str, ngram_range=(1, 2)) -> Vocabulary:
    if kind == "count":
        return fit_count(train_docs, ngram_range)
    if kind == "tfidf":
        return fit_tfidf(train_docs, ngram_range)
    raise ValueError(f"unknown vectorizer {kind!r}")


def transform(docs: Sequence, vocab: Vocabulary) -> FeatureMatrix:
    return transform_count(docs, vocab) if vocab.idf is None else transform_tfidf(docs, vocab)
