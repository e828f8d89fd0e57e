# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: sparse products with the stacked label matrix,
the sparse part of the likelihood scores, and tie-aware argmax."""

import numpy as np


cdef class AbarOperator:
    """The n x nL matrix whose row ``u`` holds a 1 (or a weight) at column
    ``(l - 1) * n + w`` for every stored label ``l`` on pair ``(u, w)``.

    Built from a symmetric CSR structure (``indptr``, ``indices``) and the
    precomputed column of every stored entry.
    """

    cdef readonly Py_ssize_t n_rows, n_cols
    cdef const long long[::1] indptr
    cdef const long long[::1] cols
    cdef const double[::1] weights
    cdef bint weighted

    def __init__(self, indptr, cols, Py_ssize_t n_rows, Py_ssize_t n_cols, weights=None):
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.cols = np.ascontiguousarray(cols, dtype=np.int64)
        self.n_rows = n_rows
        self.n_cols = n_cols
        self.weighted = weights is not None
        if self.weighted:
            self.weights = np.ascontiguousarray(weights, dtype=np.float64)
        else:
            self.weights = np.zeros(1, dtype=np.float64)

    cdef void _matvec(self, const double[::1] x, double[::1] y) noexcept nogil:
        cdef Py_ssize_t u, e
        cdef double acc
        for u in range(self.n_rows):
            acc = 0.0
            if self.weighted:
                for e in range(self.indptr[u], self.indptr[u + 1]):
                    acc += self.weights[e] * x[self.cols[e]]
            else:
                for e in range(self.indptr[u], self.indptr[u + 1]):
                    acc += x[self.cols[e]]
            y[u] = acc

    cdef void _rmatvec(self, const double[::1] y, double[::1] z) noexcept nogil:
        cdef Py_ssize_t u, e
        cdef double yu
        for e in range(self.n_cols):
            z[e] = 0.0
        for u in range(self.n_rows):
            yu = y[u]
            if self.weighted:
                for e in range(self.indptr[u], self.indptr[u + 1]):
                    z[self.cols[e]] += self.weights[e] * yu
            else:
                for e in range(self.indptr[u], self.indptr[u + 1]):
                    z[self.cols[e]] += yu

    def matvec(self, x):
        cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
        out = np.empty(self.n_rows, dtype=np.float64)
        cdef double[::1] ov = out
        with nogil:
            self._matvec(xv, ov)
        return out

    def rmatvec(self, y):
        cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
        out = np.empty(self.n_cols, dtype=np.float64)
        cdef double[::1] ov = out
        with nogil:
            self._rmatvec(yv, ov)
        return out

    def gram(self, x, Py_ssize_t rounds=1):
        """Apply ``Abar^T Abar`` ``rounds`` times without renormalizing."""
        cdef double[::1] z = np.array(x, dtype=np.float64)
        buf = np.empty(self.n_rows, dtype=np.float64)
        cdef double[::1] bv = buf
        cdef Py_ssize_t r
        with nogil:
            for r in range(rounds):
                self._matvec(z, bv)
                self._rmatvec(bv, z)
        return np.asarray(z)


def score_pass(const long long[::1] indptr, const long long[::1] indices,
               const long long[::1] labels, const long long[::1] clusters,
               const double[:, :, ::1] delta):
    """``S[v, k] = sum over stored (v, w, l) of delta[clusters[w], l, k]``."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t K = delta.shape[2]
    out = np.zeros((n, K), dtype=np.float64)
    cdef double[:, ::1] S = out
    cdef Py_ssize_t v, e, k, c, l
    with nogil:
        for v in range(n):
            for e in range(indptr[v], indptr[v + 1]):
                c = clusters[indices[e]]
                l = labels[e]
                for k in range(K):
                    S[v, k] += delta[c, l, k]
    return out


def tie_argmax(const double[:, ::1] S, const double[::1] u, double tol):
    """Row-wise argmax; entries within ``tol`` of the maximum tie and the
    winner is tie number ``floor(u[v] * m)`` among the ``m`` tied entries."""
    cdef Py_ssize_t n = S.shape[0], K = S.shape[1]
    out = np.empty(n, dtype=np.int64)
    cdef long long[::1] o = out
    cdef Py_ssize_t v, k, m, pick
    cdef double best
    with nogil:
        for v in range(n):
            best = S[v, 0]
            for k in range(1, K):
                if S[v, k] > best:
                    best = S[v, k]
            m = 0
            for k in range(K):
                if S[v, k] >= best - tol:
                    m += 1
            pick = <Py_ssize_t>(u[v] * m)
            if pick >= m:
                pick = m - 1
            for k in range(K):
                if S[v, k] >= best - tol:
                    if pick == 0:
                        o[v] = k
                        break
                    pick -= 1
    return out
