# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: Gini split search, node feature sets, tree traversal, SMO.

Semantics mirror ``fakestack._pycore`` operation for operation.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, INFINITY
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()

ctypedef cnp.int64_t i64


cdef struct Entry:
    double val
    double w0
    double w1
    i64 order


cdef int _cmp_entry(const void* a, const void* b) noexcept nogil:
    cdef const Entry* ea = <const Entry*> a
    cdef const Entry* eb = <const Entry*> b
    if ea.val < eb.val:
        return -1
    if ea.val > eb.val:
        return 1
    if ea.order < eb.order:
        return -1
    if ea.order > eb.order:
        return 1
    return 0


def best_split(const i64[::1] indptr, const i64[::1] indices, const double[::1] data,
               const i64[::1] features, const double[::1] weight, const i64[::1] y,
               double total0, double total1, i64 n_node, double min_gain):
    """Best (feature, threshold, gain) over ``features`` for the node whose
    samples carry ``weight > 0``.  CSC input; absent entries are zeros."""
    cdef double total = total0 + total1
    cdef double parent = 1.0 - (total0 * total0 + total1 * total1) / (total * total)
    cdef double best_gain = min_gain
    cdef i64 best_feature = -1
    cdef double best_threshold = 0.0
    cdef i64 max_len = 0
    cdef i64 fi, f, k, m, n_present, r
    cdef double s0, s1, l0, l1, wl, wr, r0, r1, impurity, gain, thr, v
    cdef Entry* buf
    for fi in range(features.shape[0]):
        f = features[fi]
        if indptr[f + 1] - indptr[f] > max_len:
            max_len = indptr[f + 1] - indptr[f]
    buf = <Entry*> malloc((max_len + 1) * sizeof(Entry))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for fi in range(features.shape[0]):
                f = features[fi]
                m = 0
                s0 = 0.0
                s1 = 0.0
                for k in range(indptr[f], indptr[f + 1]):
                    r = indices[k]
                    if weight[r] > 0.0:
                        buf[m].val = data[k]
                        buf[m].order = m
                        if y[r] == 0:
                            buf[m].w0 = weight[r]
                            buf[m].w1 = 0.0
                            s0 = s0 + weight[r]
                        else:
                            buf[m].w0 = 0.0
                            buf[m].w1 = weight[r]
                            s1 = s1 + weight[r]
                        m += 1
                n_present = m
                if n_present < n_node:
                    buf[m].val = 0.0
                    buf[m].order = m
                    buf[m].w0 = total0 - s0
                    buf[m].w1 = total1 - s1
                    if buf[m].w0 < 0.0:
                        buf[m].w0 = 0.0
                    if buf[m].w1 < 0.0:
                        buf[m].w1 = 0.0
                    m += 1
                if m < 2:
                    continue
                qsort(buf, m, sizeof(Entry), _cmp_entry)
                l0 = 0.0
                l1 = 0.0
                for k in range(m - 1):
                    l0 = l0 + buf[k].w0
                    l1 = l1 + buf[k].w1
                    if buf[k + 1].val <= buf[k].val:
                        continue
                    wl = l0 + l1
                    r0 = total0 - l0
                    r1 = total1 - l1
                    wr = r0 + r1
                    if wl <= 0.0 or wr <= 0.0:
                        continue
                    impurity = (wl - (l0 * l0 + l1 * l1) / wl) + (wr - (r0 * r0 + r1 * r1) / wr)
                    gain = parent - impurity / total
                    if gain > best_gain:
                        v = buf[k].val
                        thr = 0.5 * (v + buf[k + 1].val)
                        if thr >= buf[k + 1].val or thr < v:
                            thr = v
                        best_gain = gain
                        best_feature = f
                        best_threshold = thr
    finally:
        free(buf)
    return best_feature, best_threshold, best_gain


def present_features(const i64[::1] indptr, const i64[::1] indices, const i64[::1] rows,
                     cnp.uint8_t[::1] mark):
    """Sorted ids of the columns with a stored entry in any of ``rows``.

    ``mark`` is an all-zero scratch buffer of length n_features; it is
    left all-zero on return.
    """
    cdef Py_ssize_t r, p, n = 0
    cdef i64 f
    cdef i64[::1] found = np.empty(mark.shape[0], dtype=np.int64)
    for r in range(rows.shape[0]):
        for p in range(indptr[rows[r]], indptr[rows[r] + 1]):
            f = indices[p]
            if not mark[f]:
                mark[f] = 1
                found[n] = f
                n += 1
    for p in range(n):
        mark[found[p]] = 0
    out = np.asarray(found[:n]).copy()
    out.sort()
    return out


cdef inline double _csr_get(const i64[::1] indptr, const i64[::1] indices,
                            const double[::1] data, i64 row, i64 col) noexcept nogil:
    cdef i64 lo = indptr[row]
    cdef i64 hi = indptr[row + 1]
    cdef i64 mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if indices[mid] < col:
            lo = mid + 1
        else:
            hi = mid
    if lo < indptr[row + 1] and indices[lo] == col:
        return data[lo]
    return 0.0


def apply_tree(const i64[::1] indptr, const i64[::1] indices, const double[::1] data,
               const i64[::1] feature, const double[::1] threshold,
               const i64[::1] left, const i64[::1] right):
    """Leaf node id reached by every row of a CSR matrix (sorted indices)."""
    cdef i64 n_rows = indptr.shape[0] - 1
    out = np.empty(n_rows, dtype=np.int64)
    cdef i64[::1] leaf = out
    cdef i64 r, node
    with nogil:
        for r in range(n_rows):
            node = 0
            while left[node] >= 0:
                if _csr_get(indptr, indices, data, r, feature[node]) <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            leaf[r] = node
    return out


cdef class _KernelRows:
    """RBF kernel rows over a CSR matrix with a FIFO row cache."""
    cdef const i64[::1] indptr
    cdef const i64[::1] indices
    cdef const double[::1] data
    cdef const double[::1] sqnorm
    cdef double gamma
    cdef i64 n
    cdef double[:, ::1] cache
    cdef i64[::1] slot_of
    cdef i64[::1] row_in
    cdef double[::1] work
    cdef i64 next_slot

    def __init__(self, indptr, indices, data, sqnorm, double gamma, i64 n_cols, i64 cache_rows):
        self.indptr = indptr
        self.indices = indices
        self.data = data
        self.sqnorm = sqnorm
        self.gamma = gamma
        self.n = indptr.shape[0] - 1
        cache_rows = max(2, min(cache_rows, self.n))
        self.cache = np.empty((cache_rows, self.n), dtype=np.float64)
        self.slot_of = np.full(self.n, -1, dtype=np.int64)
        self.row_in = np.full(cache_rows, -1, dtype=np.int64)
        self.work = np.zeros(n_cols, dtype=np.float64)
        self.next_slot = 0

    cdef double* row(self, i64 i, i64 pinned) noexcept nogil:
        cdef i64 s = self.slot_of[i]
        cdef i64 t, k
        cdef double dot, d2
        if s >= 0:
            return &self.cache[s, 0]
        s = self.next_slot
        if pinned >= 0 and self.row_in[s] == pinned:
            s = (s + 1) % self.cache.shape[0]
        self.next_slot = (s + 1) % self.cache.shape[0]
        if self.row_in[s] >= 0:
            self.slot_of[self.row_in[s]] = -1
        self.row_in[s] = i
        self.slot_of[i] = s
        for k in range(self.indptr[i], self.indptr[i + 1]):
            self.work[self.indices[k]] = self.data[k]
        for t in range(self.n):
            dot = 0.0
            for k in range(self.indptr[t], self.indptr[t + 1]):
                dot = dot + self.data[k] * self.work[self.indices[k]]
            d2 = self.sqnorm[i] + self.sqnorm[t] - 2.0 * dot
            if d2 < 0.0:
                d2 = 0.0
            self.cache[s, t] = exp(-self.gamma * d2)
        for k in range(self.indptr[i], self.indptr[i + 1]):
            self.work[self.indices[k]] = 0.0
        return &self.cache[s, 0]


cdef double TAU = 1e-12


def smo_solve(indptr, indices, data, const double[::1] sqnorm, i64 n_cols,
              const double[::1] y, const double[::1] upper, double gamma,
              double eps, i64 max_iter, i64 cache_rows):
    """Dual soft-margin SVM with an RBF kernel.

    Returns ``(alpha, rho, n_iter, converged)``; the decision function is
    ``sum_t alpha_t y_t K(x_t, x) - rho``.
    """
    cdef i64 n = sqnorm.shape[0]
    cdef _KernelRows K = _KernelRows(indptr, indices, data, sqnorm, gamma, n_cols, cache_rows)
    alpha_arr = np.zeros(n, dtype=np.float64)
    grad_arr = np.full(n, -1.0, dtype=np.float64)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] G = grad_arr
    cdef i64 it = 0, t, i, j
    cdef bint converged = False
    cdef double gmax, gmax2, obj_min, grad_diff, quad, obj
    cdef double old_ai, old_aj, delta, diff, total, Ci, Cj, dai, daj
    cdef double* Ki
    cdef double* Kj
    with nogil:
        while it < max_iter:
            gmax = -INFINITY
            i = -1
            for t in range(n):
                if y[t] > 0.0:
                    if alpha[t] < upper[t] and -G[t] > gmax:
                        gmax = -G[t]
                        i = t
                else:
                    if alpha[t] > 0.0 and G[t] > gmax:
                        gmax = G[t]
                        i = t
            if i < 0:
                converged = True
                break
            Ki = K.row(i, -1)
            gmax2 = -INFINITY
            obj_min = INFINITY
            j = -1
            for t in range(n):
                if y[t] > 0.0:
                    if alpha[t] > 0.0:
                        grad_diff = gmax + G[t]
                        if G[t] > gmax2:
                            gmax2 = G[t]
                        if grad_diff > 0.0:
                            quad = 2.0 - 2.0 * Ki[t]
                            if quad <= 0.0:
                                quad = TAU
                            obj = -(grad_diff * grad_diff) / quad
                            if obj < obj_min:
                                obj_min = obj
                                j = t
                else:
                    if alpha[t] < upper[t]:
                        grad_diff = gmax - G[t]
                        if -G[t] > gmax2:
                            gmax2 = -G[t]
                        if grad_diff > 0.0:
                            quad = 2.0 - 2.0 * Ki[t]
                            if quad <= 0.0:
                                quad = TAU
                            obj = -(grad_diff * grad_diff) / quad
                            if obj < obj_min:
                                obj_min = obj
                                j = t
            if gmax + gmax2 < eps or j < 0:
                converged = True
                break
            it += 1
            Ki = K.row(i, -1)
            Kj = K.row(j, i)
            Ci = upper[i]
            Cj = upper[j]
            old_ai = alpha[i]
            old_aj = alpha[j]
            if y[i] != y[j]:
                quad = 2.0 - 2.0 * Ki[j]
                if quad <= 0.0:
                    quad = TAU
                delta = (-G[i] - G[j]) / quad
                diff = alpha[i] - alpha[j]
                alpha[i] += delta
                alpha[j] += delta
                if diff > 0.0:
                    if alpha[j] < 0.0:
                        alpha[j] = 0.0
                        alpha[i] = diff
                else:
                    if alpha[i] < 0.0:
                        alpha[i] = 0.0
                        alpha[j] = -diff
                if diff > Ci - Cj:
                    if alpha[i] > Ci:
                        alpha[i] = Ci
                        alpha[j] = Ci - diff
                else:
                    if alpha[j] > Cj:
                        alpha[j] = Cj
                        alpha[i] = Cj + diff
            else:
                quad = 2.0 - 2.0 * Ki[j]
                if quad <= 0.0:
                    quad = TAU
                delta = (G[i] - G[j]) / quad
                total = alpha[i] + alpha[j]
                alpha[i] -= delta
                alpha[j] += delta
                if total > Ci:
                    if alpha[i] > Ci:
                        alpha[i] = Ci
                        alpha[j] = total - Ci
                else:
                    if alpha[j] < 0.0:
                        alpha[j] = 0.0
                        alpha[i] = total
                if total > Cj:
                    if alpha[j] > Cj:
                        alpha[j] = Cj
                        alpha[i] = total - Cj
                else:
                    if alpha[i] < 0.0:
                        alpha[i] = 0.0
                        alpha[j] = total
            dai = alpha[i] - old_ai
            daj = alpha[j] - old_aj
            for t in range(n):
                G[t] += y[t] * (y[i] * Ki[t] * dai + y[j] * Kj[t] * daj)
    return alpha_arr, _rho(alpha_arr, grad_arr, np.asarray(y), np.asarray(upper)), it, bool(converged)


def _rho(alpha, grad, y, upper):
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
