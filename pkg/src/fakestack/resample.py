"""Class rebalancing on sparse feature rows.

Oversamplers keep every input row (in order) and append new minority rows;
undersamplers return a subset of the input rows in their original order.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .classify.base import as_csr

logger = logging.getLogger(__name__)

METHODS = ("random_over", "smote", "adasyn", "random_under", "nearmiss")


@dataclass(frozen=True)
class ResamplePlan:
    method: str = "smote"
    k_neighbors: int = 5
    nearmiss_version: int = 1
    nearmiss_k3: int = 3
    beta: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown resampling method {self.method!r}")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if self.nearmiss_version not in (1, 2, 3):
            raise ValueError("nearmiss_version must be 1, 2 or 3")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must lie in (0, 1]")


@dataclass(frozen=True)
class NeighborIndex:
    """Row ``q`` lists the ``k`` nearest references of query ``q``, nearest first."""

    indices: np.ndarray
    distances: np.ndarray


def _sqnorms(X):
    return np.asarray(X.multiply(X).sum(axis=1)).ravel()


def _sq_distances(Q, R, qn, rn, lo, hi):
    dots = (Q[lo:hi] @ R.T).toarray()
    d2 = qn[lo:hi, None] + rn[None, :] - 2.0 * dots
    np.maximum(d2, 0.0, out=d2)
    return d2


def _exact_distances(Q, R, qi, ri):
    diff = Q[qi] - R[ri]
    return np.sqrt(np.asarray(diff.multiply(diff).sum(axis=1)).ravel())


def knn(queries, refs, k: int, exclude_self: bool = False, query_ids=None,
        chunk: int = 1024) -> NeighborIndex:
    """Exact brute-force Euclidean neighbours; ties go to the lower reference id.

    With ``exclude_self`` the queries and references are the same rows and a
    row is never its own neighbour.  ``query_ids`` generalises this: query
    ``q`` never receives reference ``query_ids[q]``.
    """
    Q, R = as_csr(queries), as_csr(refs)
    if Q.shape[1] != R.shape[1]:
        raise ValueError(f"queries have {Q.shape[1]} features, references {R.shape[1]}")
    if exclude_self:
        query_ids = np.arange(Q.shape[0])
    available = R.shape[0] - (1 if query_ids is not None else 0)
    if k > available:
        raise ValueError(f"k={k} exceeds the {available} available reference rows")
    if k < 1:
        raise ValueError("k must be >= 1")
    qn, rn = _sqnorms(Q), _sqnorms(R)
    out_idx = np.empty((Q.shape[0], k), dtype=np.int64)
    for lo in range(0, Q.shape[0], chunk):
        hi = min(lo + chunk, Q.shape[0])
        d2 = _sq_distances(Q, R, qn, rn, lo, hi)
        if query_ids is not None:
            d2[np.arange(hi - lo), query_ids[lo:hi]] = np.inf
        out_idx[lo:hi] = np.argsort(d2, axis=1, kind="stable")[:, :k]
    qi = np.repeat(np.arange(Q.shape[0]), k)
    dist = _exact_distances(Q, R, qi, out_idx.ravel()).reshape(out_idx.shape)
    # the exact distances can reorder near-ties left by the expanded form
    order = np.lexsort((out_idx, dist), axis=1) if k > 1 else np.zeros_like(out_idx)
    rows = np.arange(Q.shape[0])[:, None]
    return NeighborIndex(out_idx[rows, order], dist[rows, order])


def pairwise_distances(A, B, chunk: int = 1024) -> np.ndarray:
    A, B = as_csr(A), as_csr(B)
    an, bn = _sqnorms(A), _sqnorms(B)
    out = np.empty((A.shape[0], B.shape[0]))
    for lo in range(0, A.shape[0], chunk):
        hi = min(lo + chunk, A.shape[0])
        out[lo:hi] = np.sqrt(_sq_distances(A, B, an, bn, lo, hi))
    return out


def class_roles(y) -> tuple[int, int, int, int]:
    """``(minority, majority, n_min, n_maj)``; on a tie the lower label is majority."""
    labels, counts = np.unique(np.asarray(y), return_counts=True)
    if len(labels) != 2:
        raise ValueError(f"resampling needs exactly two classes, got {labels.tolist()}")
    if counts[0] < counts[1]:
        return labels[0], labels[1], counts[0], counts[1]
    return labels[1], labels[0], counts[1], counts[0]


def _unchanged(X, y):
    return as_csr(X).copy(), np.asarray(y).copy()


def _append(X, y, new_rows, label):
    X_out = sp.vstack([X, new_rows], format="csr")
    X_out.sort_indices()
    return X_out, np.concatenate([np.asarray(y), np.full(new_rows.shape[0], label, dtype=np.asarray(y).dtype)])


def random_oversample(X, y, seed: int = 0):
    """Duplicate minority rows, drawn with replacement, until the classes match."""
    X, y = as_csr(X), np.asarray(y)
    minority, _, n_min, n_maj = class_roles(y)
    if n_min == n_maj:
        return _unchanged(X, y)
    rng = np.random.default_rng(seed)
    min_idx = np.flatnonzero(y == minority)
    picks = min_idx[rng.integers(0, n_min, n_maj - n_min)]
    return _append(X, y, X[picks], minority)


def _interpolate(Xmin, base, nbr, lam):
    A, B = Xmin[base], Xmin[nbr]
    S = A + sp.diags(lam) @ (B - A)
    S = sp.csr_matrix(S)
    S.eliminate_zeros()
    return S


def _clamp_k(k, limit, what):
    if k > limit:
        logger.warning("%s: k_neighbors=%d clamped to %d", what, k, limit)
        return limit
    return k


def smote(X, y, plan: ResamplePlan | None = None, return_provenance: bool = False):
    """Append ``x_i + lam * (x_nn - x_i)`` rows until the classes match.

    ``x_i`` is drawn uniformly from the minority class, ``x_nn`` uniformly
    from its ``k`` nearest minority neighbours and ``lam`` from U[0, 1).
    With ``return_provenance`` a dict of original minority row ids
    (``base``, ``neighbor``) and ``lam`` per synthetic row is also returned.
    """
    plan = plan or ResamplePlan("smote")
    X, y = as_csr(X), np.asarray(y)
    minority, _, n_min, n_maj = class_roles(y)
    if n_min < 2:
        raise ValueError(f"SMOTE needs at least 2 minority rows, got {n_min}")
    empty = {"base": np.empty(0, np.int64), "neighbor": np.empty(0, np.int64), "lam": np.empty(0)}
    if n_min == n_maj:
        return (*_unchanged(X, y), empty) if return_provenance else _unchanged(X, y)
    k = _clamp_k(plan.k_neighbors, n_min - 1, "SMOTE")
    min_idx = np.flatnonzero(y == minority)
    Xmin = X[min_idx]
    nn = knn(Xmin, Xmin, k, exclude_self=True).indices
    rng = np.random.default_rng(plan.seed)
    n_new = n_maj - n_min
    base = rng.integers(0, n_min, n_new)
    nbr = nn[base, rng.integers(0, k, n_new)]
    lam = rng.random(n_new)
    X_out, y_out = _append(X, y, _interpolate(Xmin, base, nbr, lam), minority)
    if return_provenance:
        return X_out, y_out, {"base": min_idx[base], "neighbor": min_idx[nbr], "lam": lam}
    return X_out, y_out


def largest_remainder(weights: np.ndarray, total: int) -> np.ndarray:
    """Integer allocation of ``total`` proportional to ``weights`` (summing to 1).

    Floors first, then hands the leftover units to the largest fractional
    parts (lower index first on ties).
    """
    raw = weights * total
    alloc = np.floor(raw).astype(np.int64)
    left = int(total - alloc.sum())
    if left > 0:
        frac = raw - alloc
        order = np.lexsort((np.arange(len(frac)), -frac))
        alloc[order[:left]] += 1
    return alloc


def adasyn_allocation(X, y, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-minority-row ``(majority_neighbor_count, difficulty_ratio)`` using the
    ``k`` nearest neighbours among all rows."""
    X, y = as_csr(X), np.asarray(y)
    minority, *_ = class_roles(y)
    min_idx = np.flatnonzero(y == minority)
    nn = knn(X[min_idx], X, k, query_ids=min_idx).indices
    delta = (y[nn] != minority).sum(axis=1)
    return delta, delta / k


def adasyn(X, y, plan: ResamplePlan | None = None, return_provenance: bool = False):
    """SMOTE-style generation with per-row budgets proportional to the share of
    majority rows among each minority row's neighbours."""
    plan = plan or ResamplePlan("adasyn")
    X, y = as_csr(X), np.asarray(y)
    minority, _, n_min, n_maj = class_roles(y)
    if n_min < 2:
        raise ValueError(f"ADASYN needs at least 2 minority rows, got {n_min}")
    empty = {"base": np.empty(0, np.int64), "neighbor": np.empty(0, np.int64), "lam": np.empty(0)}
    G = int(math.floor(plan.beta * (n_maj - n_min) + 0.5))
    if G == 0:
        return (*_unchanged(X, y), empty) if return_provenance else _unchanged(X, y)
    k_all = _clamp_k(plan.k_neighbors, X.shape[0] - 1, "ADASYN")
    k_min = _clamp_k(plan.k_neighbors, n_min - 1, "ADASYN")
    _, ratio = adasyn_allocation(X, y, k_all)
    if ratio.sum() == 0:
        logger.warning("ADASYN: no minority row has majority neighbours; allocating uniformly")
        share = np.full(n_min, 1.0 / n_min)
    else:
        share = ratio / ratio.sum()
    g = largest_remainder(share, G)
    min_idx = np.flatnonzero(y == minority)
    Xmin = X[min_idx]
    nn = knn(Xmin, Xmin, k_min, exclude_self=True).indices
    rng = np.random.default_rng(plan.seed)
    base = np.repeat(np.arange(n_min), g)
    nbr = nn[base, rng.integers(0, k_min, len(base))]
    lam = rng.random(len(base))
    X_out, y_out = _append(X, y, _interpolate(Xmin, base, nbr, lam), minority)
    if return_provenance:
        return X_out, y_out, {"base": min_idx[base], "neighbor": min_idx[nbr], "lam": lam}
    return X_out, y_out


def _subset(X, y, keep):
    keep = np.sort(keep)
    return X[keep], np.asarray(y)[keep]


def undersample_selection(y, seed: int = 0) -> np.ndarray:
    """Row ids of the majority rows random undersampling keeps (ascending)."""
    y = np.asarray(y)
    _, majority, n_min, _ = class_roles(y)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(np.flatnonzero(y == majority), size=n_min, replace=False))


def random_undersample(X, y, seed: int = 0):
    """Keep a uniform sample (without replacement) of majority rows the size of the minority."""
    X, y = as_csr(X), np.asarray(y)
    minority, _, n_min, n_maj = class_roles(y)
    if n_min == n_maj:
        return _unchanged(X, y)
    kept = undersample_selection(y, seed)
    return _subset(X, y, np.concatenate([np.flatnonzero(y == minority), kept]))


def nearmiss_selection(X, y, version: int = 1, k: int = 5, k3: int = 3) -> np.ndarray:
    """Row ids of the majority rows NearMiss keeps (ascending)."""
    X, y = as_csr(X), np.asarray(y)
    minority, majority, n_min, _ = class_roles(y)
    if k > n_min:
        raise ValueError(f"NearMiss: k={k} exceeds the {n_min} minority rows")
    maj_idx = np.flatnonzero(y == majority)
    Xmin = X[y == minority]
    if version == 1:
        score = knn(X[maj_idx], Xmin, k).distances.mean(axis=1)
        chosen = np.argsort(score, kind="stable")[:n_min]
    elif version == 2:
        D = pairwise_distances(X[maj_idx], Xmin)
        D.sort(axis=1)
        score = D[:, -k:].mean(axis=1)
        chosen = np.argsort(score, kind="stable")[:n_min]
    else:
        # step 1: short-list the m nearest majority rows of every minority row,
        # widening m until the short list can fill the quota
        D = pairwise_distances(Xmin, X[maj_idx])
        order = np.argsort(D, axis=1, kind="stable")
        m = min(k3, len(maj_idx))
        while True:
            shortlist = np.unique(order[:, :m])
            if len(shortlist) >= n_min or m >= len(maj_idx):
                break
            m += 1
        # step 2: keep the short-listed rows farthest (on average) from their
        # k nearest minority rows
        score = knn(X[maj_idx[shortlist]], Xmin, k).distances.mean(axis=1)
        chosen = shortlist[np.lexsort((shortlist, -score))[:n_min]]
    return np.sort(maj_idx[chosen])


def nearmiss(X, y, plan: ResamplePlan | None = None):
    plan = plan or ResamplePlan("nearmiss")
    X, y = as_csr(X), np.asarray(y)
    minority, _, n_min, n_maj = class_roles(y)
    if n_min == n_maj:
        return _unchanged(X, y)
    kept = nearmiss_selection(X, y, plan.nearmiss_version, plan.k_neighbors, plan.nearmiss_k3)
    return _subset(X, y, np.concatenate([np.flatnonzero(y == minority), kept]))


def resample(X, y, plan: ResamplePlan):
    if plan.method == "random_over":
        return random_oversample(X, y, plan.seed)
    if plan.method == "smote":
        return smote(X, y, plan)
    if plan.method == "adasyn":
        return adasyn(X, y, plan)
    if plan.method == "random_under":
        return random_undersample(X, y, plan.seed)
    return nearmiss(X, y, plan)


def dump_triplets(X, y, path) -> None:
    """Write ``row<TAB>col<TAB>value`` lines (labels as ``row<TAB>label<TAB>y``) for debugging."""
    X = as_csr(X).tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# rows={X.shape[0]} cols={X.shape[1]}\n")
        for r, c, v in zip(X.row, X.col, X.data):
            fh.write(f"{r}\t{c}\t{float(v)!r}\n")
        for r, label in enumerate(np.asarray(y)):
            fh.write(f"{r}\tlabel\t{int(label)}\n")
