"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_core.py [--repeat 3] [--rows 2000]

Each kernel runs on identical inputs under both backends; the table reports
the best wall time of ``--repeat`` runs and the speed-up.
"""
import argparse
import time

import numpy as np
import scipy.sparse as sp

from fakestack import _pycore
from fakestack.classify import as_csr, train_dtree

try:
    from fakestack import _core
except ImportError:
    _core = None


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _text_like(rng, rows, cols, density):
    X = sp.random(rows, cols, density=density, format="csr", random_state=rng,
                  data_rvs=lambda k: rng.integers(1, 4, k).astype(float))
    X.indptr = X.indptr.astype(np.int64)
    X.indices = X.indices.astype(np.int64)
    return X


def cases(rows, rng):
    X = _text_like(rng, rows, 3000, 0.01)
    y = (rng.random(rows) < 0.2).astype(np.int64)
    w = np.ones(rows)
    t0, t1 = float(np.sum(y == 0)), float(np.sum(y == 1))
    csc = X.tocsc()
    csc.indptr = csc.indptr.astype(np.int64)
    csc.indices = csc.indices.astype(np.int64)
    feats = np.arange(X.shape[1], dtype=np.int64)
    yield "best_split", lambda m: m.best_split(csc.indptr, csc.indices, csc.data, feats, w, y, t0, t1, rows, 1e-7)

    node_rows = np.sort(rng.choice(rows, rows // 2, replace=False)).astype(np.int64)
    mark = np.zeros(X.shape[1], dtype=np.uint8)
    yield "present_features", lambda m: m.present_features(X.indptr, X.indices, node_rows, mark)

    tree = train_dtree(X[: min(rows, 1500)], y[: min(rows, 1500)], max_depth=12).tree
    yield "apply_tree", lambda m: m.apply_tree(X.indptr, X.indices, X.data, tree.feature, tree.threshold,
                                               tree.left, tree.right)

    n = min(rows, 600)
    Xs = as_csr(X[:n])
    ypm = np.where(y[:n] == 1, 1.0, -1.0)
    sq = np.asarray(Xs.multiply(Xs).sum(axis=1)).ravel()
    upper = np.ones(n)
    yield "smo_solve", lambda m: m.smo_solve(Xs.indptr, Xs.indices, Xs.data, sq, Xs.shape[1], ypm, upper,
                                             1.0, 1e-3, 10_000_000, n)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--rows", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _core is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation` first")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<18}{'compiled s':>12}{'python s':>12}{'speed-up':>10}")
    for name, call in cases(args.rows, rng):
        fast = _best(lambda: call(_core), args.repeat)
        slow = _best(lambda: call(_pycore), args.repeat)
        print(f"{name:<18}{fast:>12.4f}{slow:>12.4f}{slow / fast:>9.1f}x")


if __name__ == "__main__":
    main()
