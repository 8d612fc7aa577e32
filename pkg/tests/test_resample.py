import logging
from collections import Counter

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from fakestack.resample import (ResamplePlan, adasyn, adasyn_allocation, class_roles, dump_triplets, knn,
                                largest_remainder, nearmiss, nearmiss_selection, pairwise_distances,
                                random_oversample, random_undersample, resample, smote)
from oracles import dense_knn, on_segment, random_sparse_fixture, row_multiset


def _counts(y):
    return Counter(np.asarray(y).tolist())


# ---- knn -------------------------------------------------------------------

def test_knn_hand_example():
    refs = np.array([[0, 0], [1, 0], [0, 3]], float)
    nb = knn(refs, refs, 1, exclude_self=True)
    assert nb.indices[0, 0] == 1 and nb.distances[0, 0] == pytest.approx(1.0)


def test_knn_exact_duplicate_is_nearest():
    refs = np.array([[5, 5], [1, 2], [1, 2]], float)
    nb = knn(np.array([[1, 2]], float), refs, 2)
    assert nb.indices[0].tolist() == [1, 2]
    assert nb.distances[0].tolist() == [0.0, 0.0]


def test_knn_all_refs_sorted():
    rng = np.random.default_rng(0)
    R = rng.random((6, 3))
    nb = knn(R[:2], R, 6)
    assert sorted(nb.indices[0].tolist()) == list(range(6))
    assert np.all(np.diff(nb.distances, axis=1) >= 0)


def test_knn_k_too_large_names_both_values():
    R = np.eye(3)
    with pytest.raises(ValueError, match=r"k=3 .* 2 available"):
        knn(R, R, 3, exclude_self=True)
    with pytest.raises(ValueError, match=r"k=4 .* 3 available"):
        knn(R, R, 4)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 30), st.integers(1, 6), st.booleans())
def test_knn_matches_dense_oracle(seed, n, d, integer_grid):
    rng = np.random.default_rng(seed)
    R = rng.integers(0, 3, (n, d)).astype(float) if integer_grid else rng.random((n, d))
    k = int(rng.integers(1, n))
    nb = knn(sp.csr_matrix(R), sp.csr_matrix(R), k, exclude_self=True)
    idx, dist = dense_knn(R, R, k, exclude_self=True)
    np.testing.assert_allclose(nb.distances, dist, atol=1e-12)
    # with exact ties the id order must also agree
    np.testing.assert_array_equal(nb.indices, idx)
    assert all(i not in row for i, row in enumerate(nb.indices))


def test_pairwise_distances():
    A = np.array([[0, 0], [3, 4]], float)
    np.testing.assert_allclose(pairwise_distances(A, A), [[0, 5], [5, 0]])


def test_class_roles_tie_makes_lower_label_majority():
    assert class_roles([0, 1, 1]) == (0, 1, 1, 2)
    assert class_roles([0, 1])[:2] == (1, 0)
    with pytest.raises(ValueError, match="two classes"):
        class_roles([1, 1])


# ---- oversamplers ----------------------------------------------------------

def test_random_oversample_single_minority_duplicated():
    X = np.array([[0, 1], [1, 1], [2, 1], [3, 1], [9, 9]], float)
    y = np.array([0, 0, 0, 0, 1])
    Xo, yo = random_oversample(X, y, seed=1)
    assert _counts(yo) == {0: 4, 1: 4}
    for row in Xo.toarray()[yo == 1]:
        assert row.tolist() == [9, 9]
    np.testing.assert_array_equal(Xo.toarray()[:5], X)


@pytest.mark.parametrize("fn", [random_oversample, random_undersample, nearmiss])
def test_balanced_input_unchanged(fn):
    X = sp.csr_matrix(np.arange(8, dtype=float).reshape(4, 2))
    y = np.array([0, 1, 0, 1])
    Xo, yo = fn(X, y) if fn is nearmiss else fn(X, y, 0)
    assert (Xo != X).nnz == 0 and yo.tolist() == y.tolist()


@pytest.mark.parametrize("fn", [smote, adasyn])
def test_balanced_input_unchanged_synthetic(fn):
    X = sp.csr_matrix(np.arange(8, dtype=float).reshape(4, 2))
    y = np.array([0, 1, 0, 1])
    Xo, yo = fn(X, y)
    assert (Xo != X).nnz == 0 and yo.tolist() == y.tolist()


@pytest.mark.parametrize("fn", [random_oversample, random_undersample])
def test_single_class_is_an_error(fn):
    with pytest.raises(ValueError):
        fn(np.eye(3), np.array([0, 0, 0]), 0)


def test_smote_segment_example_over_many_seeds():
    X = np.array([[0, 0], [2, 0], [5, 5], [6, 5], [7, 5], [8, 5], [9, 5], [9, 6]], float)
    y = np.array([1, 1, 0, 0, 0, 0, 0, 0])
    for seed in range(25):
        Xo, yo = smote(X, y, ResamplePlan("smote", k_neighbors=1, seed=seed))
        synth = Xo.toarray()[len(y):]
        assert len(synth) == 4 and np.all(yo[len(y):] == 1)
        assert np.all(synth[:, 1] == 0)
        assert np.all((synth[:, 0] >= 0) & (synth[:, 0] <= 2))


def test_smote_needs_two_minority_rows():
    with pytest.raises(ValueError, match="at least 2"):
        smote(np.eye(3), np.array([0, 0, 1]))


def test_smote_clamps_k_with_warning(caplog):
    X, y = np.eye(5), np.array([0, 0, 0, 1, 1])
    with caplog.at_level(logging.WARNING):
        _, yo = smote(X, y, ResamplePlan("smote", k_neighbors=5))
    assert "clamped to 1" in caplog.text
    assert _counts(yo) == {0: 3, 1: 3}


def test_smote_provenance_matches_geometry():
    rng = np.random.default_rng(4)
    X, y = random_sparse_fixture(rng, n_rows=60, skew=0.2)
    Xo, yo, prov = smote(X, y, ResamplePlan("smote", seed=3), return_provenance=True)
    D, S = X.toarray(), Xo.toarray()[X.shape[0]:]
    for s, b, nbr, lam in zip(S, prov["base"], prov["neighbor"], prov["lam"]):
        assert y[b] == 1 and y[nbr] == 1 and b != nbr
        np.testing.assert_allclose(s, D[b] + lam * (D[nbr] - D[b]), atol=1e-12)
        assert on_segment(s, D[b], D[nbr])


def test_smote_is_seeded():
    rng = np.random.default_rng(1)
    X, y = random_sparse_fixture(rng, n_rows=40, skew=0.2)
    a = smote(X, y, ResamplePlan("smote", seed=9))[0]
    b = smote(X, y, ResamplePlan("smote", seed=9))[0]
    c = smote(X, y, ResamplePlan("smote", seed=10))[0]
    assert (a != b).nnz == 0 and (a != c).nnz > 0


def test_adasyn_allocates_to_the_surrounded_point():
    # one minority row sits inside a majority cluster, the others only see their own kind
    X = np.array([
        [0, 0], [0.1, 0], [0, 0.1], [-0.1, 0], [0, -0.1],   # rows 0-4: majority around row 5
        [0, 0.01],                                          # row 5: minority, surrounded
        [50, 50], [50.1, 50], [50, 50.1],                   # rows 6-8: isolated minority trio
        [20, 0], [21, 0], [22, 0], [23, 0],                 # more majority far away
    ], float)
    y = np.array([0, 0, 0, 0, 0, 1, 1, 1, 1, 0, 0, 0, 0])
    delta, ratio = adasyn_allocation(X, y, 2)
    assert delta.tolist() == [2, 0, 0, 0]
    Xo, yo, prov = adasyn(X, y, ResamplePlan("adasyn", k_neighbors=2, seed=0), return_provenance=True)
    assert _counts(yo) == {0: 9, 1: 9}
    assert set(prov["base"].tolist()) == {5}


def test_adasyn_uniform_fallback_warns(caplog):
    X = np.array([[0, 0], [0, 1], [0, 2], [100, 0], [100, 1], [100, 2], [100, 3]], float)
    y = np.array([1, 1, 1, 0, 0, 0, 0])
    with caplog.at_level(logging.WARNING):
        _, yo = adasyn(X, y, ResamplePlan("adasyn", k_neighbors=2))
    assert "uniformly" in caplog.text
    assert _counts(yo) == {0: 4, 1: 4}


def test_adasyn_beta_scales_budget():
    rng = np.random.default_rng(2)
    X, y = random_sparse_fixture(rng, n_rows=100, skew=0.1)
    n_min, n_maj = (y == 1).sum(), (y == 0).sum()
    _, yo = adasyn(X, y, ResamplePlan("adasyn", beta=0.5))
    assert (yo == 1).sum() - n_min == int(np.floor(0.5 * (n_maj - n_min) + 0.5))


def test_full_corpus_scale_counts_for_oversamplers():
    # minority grows to exactly the majority size at full-corpus train counts (34,075 / 909)
    n_maj, n_min = 34075, 909
    assert largest_remainder(np.full(n_min, 1 / n_min), n_maj - n_min).sum() == 33166
    w = np.random.default_rng(0).random(n_min)
    assert largest_remainder(w / w.sum(), n_maj - n_min).sum() == n_maj - n_min


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 10), min_size=1, max_size=30), st.integers(0, 5000))
def test_largest_remainder_is_exact_and_close(ws, total):
    w = np.array(ws)
    if w.sum() == 0:
        w = np.ones_like(w)
    w = w / w.sum()
    alloc = largest_remainder(w, total)
    assert alloc.sum() == total
    assert np.all(np.abs(alloc - w * total) < 1 + 1e-9)


# ---- undersamplers ---------------------------------------------------------

def test_random_undersample_subset_example():
    X = np.array([[1, 0], [2, 0], [3, 0], [0, 7], [0, 8]], float)
    y = np.array([0, 0, 0, 1, 1])
    Xo, yo = random_undersample(X, y, seed=5)
    D = Xo.toarray()
    assert _counts(yo) == {0: 2, 1: 2}
    kept_major = [tuple(r) for r in D[yo == 0]]
    assert len(set(kept_major)) == 2 and set(kept_major) <= {(1, 0), (2, 0), (3, 0)}
    assert {tuple(r) for r in D[yo == 1]} == {(0, 7), (0, 8)}


def test_nearmiss_1d_example():
    X = np.array([[0], [1], [5], [10]], float)
    y = np.array([1, 0, 0, 0])
    Xo, yo = nearmiss(X, y, ResamplePlan("nearmiss", k_neighbors=1))
    assert sorted(Xo.toarray().ravel().tolist()) == [0, 1]


def test_nearmiss_versions_on_hand_fixture():
    # minority at 0 and 10; majority at 1, 4, 6, 9.5, 30
    X = np.array([[0], [10], [1], [4], [6], [9.5], [30]], float)
    y = np.array([1, 1, 0, 0, 0, 0, 0])
    # v1, k=1: nearest-minority distances 1, 4, 4, 0.5, 20 -> rows 5 and 2
    assert nearmiss_selection(X, y, 1, k=1).tolist() == [2, 5]
    # v2, k=1: farthest-minority distances 9, 6, 6, 9.5, 30 -> rows 3 and 4 (tie kept by row id)
    assert nearmiss_selection(X, y, 2, k=1).tolist() == [3, 4]
    # v3, k3=1: short list = nearest majority of each minority = rows 2 and 5; both are kept
    assert nearmiss_selection(X, y, 3, k=1, k3=1).tolist() == [2, 5]


def test_nearmiss_k_above_minority_is_an_error():
    with pytest.raises(ValueError, match="k=3"):
        nearmiss(np.eye(5), np.array([0, 0, 0, 1, 1]), ResamplePlan("nearmiss", k_neighbors=3))


def test_resample_dispatch_and_plan_validation():
    with pytest.raises(ValueError):
        ResamplePlan("tomek")
    with pytest.raises(ValueError):
        ResamplePlan("adasyn", beta=0)
    X, y = np.eye(6), np.array([0, 0, 0, 0, 1, 1])
    for m in ("random_over", "smote", "adasyn", "random_under", "nearmiss"):
        _, yo = resample(X, y, ResamplePlan(m, k_neighbors=1))
        c = _counts(yo)
        assert c[0] == c[1]


def test_dump_triplets(tmp_path):
    p = tmp_path / "t.txt"
    dump_triplets(sp.csr_matrix([[0, 1.5], [2, 0]]), [0, 1], p)
    assert p.read_text().splitlines() == ["# rows=2 cols=2", "0\t1\t1.5", "1\t0\t2.0", "0\tlabel\t0", "1\tlabel\t1"]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["random_over", "smote", "adasyn", "random_under", "nearmiss"]))
def test_conservation_and_label_purity(seed, method):
    rng = np.random.default_rng(seed)
    X, y = random_sparse_fixture(rng, n_rows=int(rng.integers(8, 80)))
    minority = 1 if (y == 1).sum() < (y == 0).sum() else 0
    plan = ResamplePlan(method, k_neighbors=min(3, int((y == minority).sum()) - 1) or 1, seed=seed)
    Xo, yo = resample(X, y, plan)
    before, after = row_multiset(X), row_multiset(Xo)
    if method in ("random_under", "nearmiss"):
        assert not (after - before)
        assert row_multiset(X[y == minority]) == row_multiset(Xo[yo == minority])
    else:
        np.testing.assert_array_equal(Xo[: X.shape[0]].toarray(), X.toarray())
        assert np.all(yo[: len(y)] == y) and np.all(yo[len(y):] == minority)
    c = _counts(yo)
    assert c[0] == c[1]
