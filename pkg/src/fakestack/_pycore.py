"""Pure numpy implementations of the kernels in ``_core.pyx``.

Split search follows the compiled loops (sequential cumulative sums, stable
ordering of tied values), so trees agree exactly on representable inputs.
SMO accumulates gradients in a different order; both solvers meet the same
stopping tolerance but may take different paths to it.
"""
from __future__ import annotations

import numpy as np

TAU = 1e-12


def best_split(indptr, indices, data, features, weight, y, total0, total1, n_node, min_gain):
    total = total0 + total1
    parent = 1.0 - (total0 * total0 + total1 * total1) / (total * total)
    best_gain, best_feature, best_threshold = min_gain, -1, 0.0
    for f in features:
        lo, hi = indptr[f], indptr[f + 1]
        rows = indices[lo:hi]
        w = weight[rows]
        keep = w > 0.0
        vals = data[lo:hi][keep]
        w = w[keep]
        is0 = y[rows][keep] == 0
        w0 = np.where(is0, w, 0.0)
        w1 = np.where(is0, 0.0, w)
        if len(vals) < n_node:
            s0 = np.cumsum(w0)[-1] if len(w0) else 0.0
            s1 = np.cumsum(w1)[-1] if len(w1) else 0.0
            vals = np.append(vals, 0.0)
            w0 = np.append(w0, max(total0 - s0, 0.0))
            w1 = np.append(w1, max(total1 - s1, 0.0))
        if len(vals) < 2:
            continue
        order = np.argsort(vals, kind="stable")
        vals, w0, w1 = vals[order], w0[order], w1[order]
        l0 = np.cumsum(w0)[:-1]
        l1 = np.cumsum(w1)[:-1]
        wl = l0 + l1
        r0 = total0 - l0
        r1 = total1 - l1
        wr = r0 + r1
        valid = (vals[1:] > vals[:-1]) & (wl > 0.0) & (wr > 0.0)
        if not valid.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            impurity = (wl - (l0 * l0 + l1 * l1) / wl) + (wr - (r0 * r0 + r1 * r1) / wr)
            gain = parent - impurity / total
        gain = np.where(valid, gain, -np.inf)
        k = int(np.argmax(gain))
        if gain[k] > best_gain:
            v = vals[k]
            thr = 0.5 * (v + vals[k + 1])
            if thr >= vals[k + 1] or thr < v:
                thr = v
            best_gain, best_feature, best_threshold = float(gain[k]), int(f), float(thr)
    return best_feature, best_threshold, best_gain


def present_features(indptr, indices, rows, mark):
    starts = indptr[rows]
    lengths = indptr[rows + 1] - starts
    total = int(lengths.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    # position of every stored entry of the selected rows
    offsets = np.repeat(starts - np.cumsum(lengths) + lengths, lengths)
    return np.unique(indices[offsets + np.arange(total)]).astype(np.int64)


def apply_tree(indptr, indices, data, feature, threshold, left, right):
    n_rows = len(indptr) - 1
    width = int(max(indices.max(initial=-1), feature.max(initial=-1))) + 1
    keys = np.repeat(np.arange(n_rows, dtype=np.int64), np.diff(indptr)) * width + indices
    node = np.zeros(n_rows, dtype=np.int64)
    active = np.arange(n_rows, dtype=np.int64)
    while active.size:
        nd = node[active]
        internal = left[nd] >= 0
        active, nd = active[internal], nd[internal]
        if not active.size:
            break
        query = active * width + feature[nd]
        pos = np.searchsorted(keys, query)
        clipped = np.minimum(pos, max(len(keys) - 1, 0))
        found = (pos < len(keys)) & (keys[clipped] == query) if len(keys) else np.zeros(len(query), bool)
        vals = np.where(found, data[clipped] if len(keys) else 0.0, 0.0)
        node[active] = np.where(vals <= threshold[nd], left[nd], right[nd])
    return node


class _KernelRows:
    def __init__(self, X, sqnorm, gamma, cache_rows):
        self.X = X
        self.sqnorm = sqnorm
        self.gamma = gamma
        self.cache_rows = max(2, cache_rows)
        self.cache: dict[int, np.ndarray] = {}

    def row(self, i, pinned=-1):
        got = self.cache.get(i)
        if got is not None:
            return got
        if len(self.cache) >= self.cache_rows:
            for victim in self.cache:
                if victim != pinned:
                    del self.cache[victim]
                    break
        lo, hi = self.X.indptr[i], self.X.indptr[i + 1]
        work = np.zeros(self.X.shape[1])
        work[self.X.indices[lo:hi]] = self.X.data[lo:hi]
        dot = self.X @ work
        d2 = self.sqnorm[i] + self.sqnorm - 2.0 * dot
        d2[d2 < 0.0] = 0.0
        out = np.exp(-self.gamma * d2)
        self.cache[i] = out
        return out


def smo_solve(indptr, indices, data, sqnorm, n_cols, y, upper, gamma, eps, max_iter, cache_rows):
    import scipy.sparse as sp

    n = len(sqnorm)
    X = sp.csr_matrix((data, indices, indptr), shape=(n, n_cols))
    K = _KernelRows(X, sqnorm, gamma, cache_rows)
    alpha = np.zeros(n)
    G = np.full(n, -1.0)
    pos = y > 0.0
    it = 0
    converged = False
    while it < max_iter:
        up = np.where(pos, alpha < upper, alpha > 0.0)
        if not up.any():
            converged = True
            break
        score = np.where(up, -y * G, -np.inf)
        i = int(np.argmax(score))
        gmax = score[i]
        Ki = K.row(i)
        low = np.where(pos, alpha > 0.0, alpha < upper)
        yg = y * G
        gmax2 = yg[low].max() if low.any() else -np.inf
        grad_diff = gmax + yg
        cand = low & (grad_diff > 0.0)
        j = -1
        if cand.any():
            quad = 2.0 - 2.0 * Ki
            quad[quad <= 0.0] = TAU
            obj = np.where(cand, -(grad_diff * grad_diff) / quad, np.inf)
            j = int(np.argmin(obj))
        if gmax + gmax2 < eps or j < 0:
            converged = True
            break
        it += 1
        Kj = K.row(j, pinned=i)
        Ci, Cj = upper[i], upper[j]
        old_ai, old_aj = alpha[i], alpha[j]
        ai, aj = old_ai, old_aj
        if y[i] != y[j]:
            quad_ij = 2.0 - 2.0 * Ki[j]
            if quad_ij <= 0.0:
                quad_ij = TAU
            delta = (-G[i] - G[j]) / quad_ij
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0.0:
                if aj < 0.0:
                    aj, ai = 0.0, diff
            elif ai < 0.0:
                ai, aj = 0.0, -diff
            if diff > Ci - Cj:
                if ai > Ci:
                    ai, aj = Ci, Ci - diff
            elif aj > Cj:
                aj, ai = Cj, Cj + diff
        else:
            quad_ij = 2.0 - 2.0 * Ki[j]
            if quad_ij <= 0.0:
                quad_ij = TAU
            delta = (G[i] - G[j]) / quad_ij
            total = ai + aj
            ai -= delta
            aj += delta
            if total > Ci:
                if ai > Ci:
                    ai, aj = Ci, total - Ci
            elif aj < 0.0:
                aj, ai = 0.0, total
            if total > Cj:
                if aj > Cj:
                    aj, ai = Cj, total - Cj
            elif ai < 0.0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        dai, daj = ai - old_ai, aj - old_aj
        G += y * (y[i] * Ki * dai + y[j] * Kj * daj)
    return alpha, rho(alpha, G, y, upper), it, converged


def rho(alpha, grad, y, upper):
    """Offset of the decision function from the dual solution."""
    yg = y * grad
    at_upper = alpha >= upper
    at_lower = alpha <= 0.0
    free = ~(at_upper | at_lower)
    if free.any():
        return float(yg[free].sum() / free.sum())
    ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
    lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
    ub = yg[ub_mask].min() if ub_mask.any() else np.inf
    lb = yg[lb_mask].max() if lb_mask.any() else -np.inf
    return float((ub + lb) / 2.0)
