"""End-to-end acceptance checks, one block per criterion.

Run with ``pytest tests/test_acceptance.py`` (or ``python tests/test_acceptance.py``);
the terminal summary prints one PASS/FAIL/SKIP line per criterion.
Set FAKESTACK_BANFAKENEWS to the real corpus CSV paths (os.pathsep separated)
to enable the real-data reproduction.
"""
import json
import math
import os
import sys
import time
from collections import Counter
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp

from fakestack import cli, stack
from fakestack.classify import train_bnb, train_dtree, train_mnb, train_rforest, train_svm_rbf
from fakestack.classify.linear import softmax_objective
from fakestack.corpus import ExperimentConfig
from fakestack.evaluate import confusion, evaluate, f1_from
from fakestack.harness import Pipeline, run_experiment, run_stacking_sweep
from fakestack.resample import ResamplePlan, adasyn, nearmiss, random_oversample, random_undersample, smote
from fakestack.synth import synthetic_corpus, write_corpus
from fakestack.vectorize import fit_tfidf, transform_tfidf
from oracles import (exhaustive_best_split, f1_interval, kkt_residuals, on_segment, random_sparse_fixture,
                     rbf_gram, recount_metrics, row_multiset)

FIXTURES = Path(__file__).parent / "fixtures"


# ---- 1: resampler contracts ------------------------------------------------

def _check_oversampler(name, X, y, Xo, yo, k, prov=None):
    n = X.shape[0]
    before, after = Counter(y.tolist()), Counter(yo.tolist())
    slack = k if name == "adasyn" else 0
    assert abs(after[0] - after[1]) <= slack, name
    # originals are kept as an untouched prefix
    assert (Xo[:n] != X).nnz == 0 and np.array_equal(yo[:n], y), name
    assert np.all(yo[n:] == 1) and after[0] == before[0], name
    if prov is None:
        # duplicates repeat, so compare as sets
        assert set(row_multiset(Xo[n:])) <= set(row_multiset(X[y == 1])), name
        return
    D, S = X.toarray(), Xo[n:].toarray()
    for s, b, nb in zip(S, prov["base"], prov["neighbor"]):
        assert y[b] == 1 and y[nb] == 1
        assert on_segment(s, D[b], D[nb], tol=1e-9), name


def _check_undersampler(name, X, y, Xo, yo):
    after = Counter(yo.tolist())
    assert after[0] == after[1] == int(np.sum(y == 1)), name
    assert row_multiset(Xo) <= row_multiset(X), name
    assert row_multiset(Xo[yo == 1]) == row_multiset(X[y == 1]), name


@pytest.mark.criterion(1, "resampler contracts on 200 random fixtures")
def test_ac1_resampler_contracts():
    rng = np.random.default_rng(20240601)
    k = 5
    start = time.perf_counter()
    for i in range(200):
        X, y = random_sparse_fixture(rng)
        if np.sum(y == 1) > np.sum(y == 0):
            y = 1 - y
        plan = dict(k_neighbors=k, seed=i)
        Xo, yo = random_oversample(X, y, seed=i)
        _check_oversampler("random_over", X, y, Xo, yo, k)
        Xo, yo, prov = smote(X, y, ResamplePlan("smote", **plan), return_provenance=True)
        _check_oversampler("smote", X, y, Xo, yo, k, prov)
        Xo, yo, prov = adasyn(X, y, ResamplePlan("adasyn", **plan), return_provenance=True)
        _check_oversampler("adasyn", X, y, Xo, yo, k, prov)
        Xo, yo = random_undersample(X, y, seed=i)
        _check_undersampler("random_under", X, y, Xo, yo)
        # NearMiss requires k <= minority count; small fixtures get a smaller k
        k_nm = min(k, int(np.sum(y == 1)))
        for version in (1, 2, 3):
            Xo, yo = nearmiss(X, y, ResamplePlan("nearmiss", k_neighbors=k_nm, nearmiss_version=version, seed=i))
            _check_undersampler(f"nearmiss-{version}", X, y, Xo, yo)
    assert time.perf_counter() - start < 60


# ---- 2: TF-IDF oracle ------------------------------------------------------

@pytest.mark.criterion(2, "TF-IDF golden corpus")
def test_ac2_tfidf_golden():
    gold = json.loads((FIXTURES / "tfidf_golden.json").read_text())
    vocab = fit_tfidf(gold["docs"], tuple(gold["ngram_range"]))
    assert list(vocab.terms) == gold["terms"]
    assert np.max(np.abs(vocab.idf - np.array(gold["idf"]))) <= 1e-9
    X = transform_tfidf(gold["docs"], vocab).X.toarray()
    for i, row in enumerate(gold["rows"]):
        expected = np.zeros(len(vocab))
        for t, v in row.items():
            expected[vocab.term_index[t]] = v
        assert np.max(np.abs(X[i] - expected)) <= 1e-9
    # independent hand values: idf(a) = 1, idf(b) = idf(c) = 1 + ln 2
    w = 1 + math.log(2)
    assert X[0, vocab.term_index["a"]] == pytest.approx(1 / math.sqrt(1 + w * w), abs=1e-9)


# ---- 3: classifier oracles -------------------------------------------------

@pytest.mark.criterion(3, "classifier oracles")
def test_ac3_classifier_oracles():
    rng = np.random.default_rng(3)
    # LR gradient against central differences
    X = sp.csr_matrix(rng.normal(size=(10, 5)))
    y01, sw = rng.integers(0, 2, 10), rng.uniform(0.5, 2.0, 10)
    W, b = rng.normal(size=(2, 5)), rng.normal(size=2)
    _, gW, gb = softmax_objective(W, b, X, y01, sw, 0.2)
    theta, analytic = np.concatenate([W.ravel(), b]), np.concatenate([gW.ravel(), gb])
    f = lambda t: softmax_objective(t[:10].reshape(2, 5), t[10:], X, y01, sw, 0.2)[0]
    numeric = np.array([(f(theta + 1e-6 * e) - f(theta - 1e-6 * e)) / 2e-6 for e in np.eye(12)])
    assert np.max(np.abs(numeric - analytic) / np.maximum(1, np.abs(analytic))) <= 1e-6

    # SVM KKT on 50 points
    yv = np.arange(50) % 2
    Xs = rng.normal(size=(50, 2)) * 0.8 + 1.2 * yv[:, None]
    svm = train_svm_rbf(Xs, yv, gamma=1.0, C=1.0)
    ypm = np.where(yv == 1, 1.0, -1.0)
    assert kkt_residuals(rbf_gram(Xs, 1.0), ypm, svm.alpha, -svm.rho, np.full(50, 1.0)).max() <= 1e-3

    # naive Bayes golden log-odds
    Xn, yn, q = np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([0, 1]), np.array([[1.0, 0.0]])
    jm = train_mnb(Xn, yn, alpha=0.01).joint_log_likelihood(q)[0]
    jb = train_bnb(Xn, yn, alpha=0.01).joint_log_likelihood(q)[0]
    assert abs((jm[0] - jm[1]) - math.log(101)) <= 1e-9
    assert abs((jb[0] - jb[1]) - 2 * math.log(101)) <= 1e-9

    # decision tree on the 1-D fixture against exhaustive enumeration
    X1, y1 = np.array([[0.0], [1.0], [2.0], [3.0]]), np.array([0, 0, 1, 1])
    tree = train_dtree(X1, y1).tree
    gain, feat, thr = exhaustive_best_split(X1, y1, np.ones(4))[0]
    assert (tree.feature[0], tree.threshold[0]) == (feat, thr) == (0, 1.5)
    assert tree.gain[0] == pytest.approx(gain, abs=1e-12)

    # forest of one unbootstrapped all-feature tree is the decision tree
    Xf = rng.normal(size=(80, 5))
    yf = (Xf[:, 0] + 0.5 * rng.normal(size=80) > 0).astype(int)
    rf = train_rforest(Xf, yf, n_estimators=1, max_features="all", bootstrap=False, max_depth=6)
    dt = train_dtree(Xf, yf, max_depth=6)
    assert np.array_equal(rf.trees[0].feature, dt.tree.feature)
    assert np.array_equal(rf.trees[0].threshold, dt.tree.threshold)
    assert np.array_equal(rf.predict(Xf), dt.predict(Xf))


# ---- 4: stacking anti-leakage ----------------------------------------------

@pytest.mark.criterion(4, "stacking out-of-fold poison test and meta shape")
def test_ac4_stacking_poison():
    rng = np.random.default_rng(4)
    n = 60
    y = np.array([1] * 15 + [0] * 45)[rng.permutation(n)]
    rates = np.ones((n, 10))
    rates[y == 1, :3] += 1.5
    X = sp.csr_matrix(rng.poisson(rates).astype(float))
    spec = stack.StackSpec(config=ExperimentConfig(rf_n_estimators=10), seed=7)
    folds = stack.stratified_folds(y, spec.n_folds, spec.seed)
    base = stack.meta_features(spec, X, y, folds)
    assert base.shape == (n, 6)
    for i in range(n):
        flipped = y.copy()
        flipped[i] = 1 - flipped[i]
        poisoned = stack.meta_features(spec, X, flipped, folds)
        assert np.array_equal(poisoned[i], base[i]), f"row {i} saw its own label"


# ---- 5: directional imbalance result ---------------------------------------

@pytest.fixture(scope="module")
def synthetic_pipeline():
    cfg = ExperimentConfig(seed=42)
    return cfg, Pipeline(synthetic_corpus(n_majority=5000, n_minority=150, seed=0), cfg)


@pytest.mark.criterion(5, "resampling beats baseline on the synthetic corpus")
def test_ac5_directional(synthetic_pipeline):
    start = time.perf_counter()
    cfg, pipe = synthetic_pipeline
    base = run_experiment(cfg.replace(vectorizer="count", classifier="LR"), None, pipe)
    sm = run_experiment(cfg.replace(method="smote", vectorizer="count", classifier="LR", oversample_test=True),
                        None, pipe)
    nm = run_experiment(cfg.replace(method="nearmiss", vectorizer="count", classifier="RFC"), None, pipe)
    print(f"\nbaseline F1 {base.f1:.3f}  SMOTE F1 {sm.f1:.3f}  NearMiss F1 {nm.f1:.3f}")
    assert sm.f1 >= base.f1 + 0.05
    assert nm.f1 >= base.f1 + 0.05
    assert time.perf_counter() - start < 300


# ---- 6: optional real-data reproduction ------------------------------------

@pytest.mark.criterion(6, "real-corpus reproduction (needs FAKESTACK_BANFAKENEWS)")
def test_ac6_real_corpus():
    paths = [p for p in os.environ.get("FAKESTACK_BANFAKENEWS", "").split(os.pathsep) if p]
    if not paths:
        pytest.skip("FAKESTACK_BANFAKENEWS not set")
    cfg = ExperimentConfig(seed=42)
    pipe = Pipeline.from_path(paths, cfg)
    assert pipe.dataset.class_counts == {0: 48678, 1: 1299}
    smote_cfg = cfg.replace(method="smote", vectorizer="count", classifier="LR", oversample_test=True)
    sm = run_experiment(smote_cfg, None, pipe)
    assert sm.counts["train_before"] == {"0": 34075, "1": 909}
    assert sm.counts["test_before"] == {"0": 14603, "1": 390}
    base = run_experiment(cfg.replace(vectorizer="tfidf", classifier="LR"), None, pipe)
    assert abs(base.f1 - 0.676) <= 0.08
    assert abs(sm.f1 - 0.931) <= 0.05
    stacked = run_stacking_sweep(pipe, cfg, meta_kinds=("RFC",)).runs[0]
    assert abs(stacked.f1 - 0.791) <= 0.06


# ---- 7: metric identities --------------------------------------------------

# reference stacking results over TF-IDF: precision, recall and the stated F1 (3 d.p.)
STACKING_ROWS = {
    "LR": (0.844, 0.690, 0.759),
    "SVM": (0.839, 0.706, 0.767),
    "MNB": (0.602, 0.669, 0.675),
    "BNB": (0.923, 0.142, 0.247),
    "RFC": (0.846, 0.742, 0.791),
    "DTC": (0.776, 0.718, 0.746),
}


@pytest.mark.criterion(7, "F1 identities: reference rows and recount oracle")
def test_ac7_metric_identities():
    consistent = {}
    for name, (p, r, stated) in STACKING_ROWS.items():
        lo, hi = f1_interval(p, r)
        consistent[name] = lo - 0.0005 <= stated <= hi + 0.0005
    assert round(f1_from(0.846, 0.742), 3) == 0.791
    # the MNB row's stated F1 is not the harmonic mean of its P and R
    # (2PR/(P+R) = 0.634); every other row is consistent at three decimals
    assert consistent == {k: k != "MNB" for k in STACKING_ROWS}

    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = int(rng.integers(1, 200))
        t = rng.integers(0, 2, n)
        p = rng.integers(0, 2, n)
        counts, ref = recount_metrics(t.tolist(), p.tolist(), 1)
        c = confusion(t, p, 1)
        m = evaluate(t, p, 1)
        assert (c.tp, c.fp, c.fn, c.tn) == counts
        assert (m.accuracy, m.precision, m.recall, m.f1) == pytest.approx(ref, abs=1e-12)


# ---- 8: determinism --------------------------------------------------------

@pytest.fixture(scope="module")
def tiny_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("ac8")
    corpus = root / "tiny.csv"
    write_corpus(synthetic_corpus(n_majority=120, n_minority=30, seed=8, vocab_size=150, doc_length=20.0), corpus)
    cfg = root / "fast.cfg"
    cfg.write_text("rf_n_estimators = 12\n", encoding="utf-8")
    return root, corpus, cfg


@pytest.mark.criterion(8, "byte-identical reports for run, sweep and stack")
@pytest.mark.parametrize("command", [
    ["run", "--method", "smote", "--classifier", "RFC"],
    ["sweep", "--method", "baseline,adasyn,nearmiss", "--vectorizer", "count,tfidf", "--classifier", "LR,RFC,SVM"],
    ["stack"],
])
def test_ac8_determinism(tiny_corpus, command, capsys):
    root, corpus, cfg = tiny_corpus
    outputs = []
    for attempt in ("first", "second"):
        out = root / f"{command[0]}-{attempt}"
        code = cli.main([*command, "--corpus", str(corpus), "--config", str(cfg), "--seed", "11",
                         "--out", str(out), "--format", "json"])
        assert code == 0
        outputs.append({name: (out / name).read_bytes() for name in ("report.json", "report.csv")})
        capsys.readouterr()
    assert outputs[0] == outputs[1]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", *sys.argv[1:]]))
