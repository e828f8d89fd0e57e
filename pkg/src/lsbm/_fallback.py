"""Pure numpy/scipy versions of the compiled kernels (same signatures)."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


class AbarOperator:
    """Sparse n x nL operator; see the compiled variant for the layout."""

    def __init__(self, indptr, cols, n_rows, n_cols, weights=None):
        indptr = np.asarray(indptr, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        data = np.ones(cols.size) if weights is None else np.asarray(weights, dtype=np.float64)
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self._M = sp.csr_matrix((data, cols, indptr), shape=(self.n_rows, self.n_cols))
        self._MT = self._M.T.tocsr()

    def matvec(self, x):
        return self._M @ np.asarray(x, dtype=np.float64)

    def rmatvec(self, y):
        return self._MT @ np.asarray(y, dtype=np.float64)

    def gram(self, x, rounds=1):
        z = np.array(x, dtype=np.float64)
        for _ in range(rounds):
            z = self._MT @ (self._M @ z)
        return z


def score_pass(indptr, indices, labels, clusters, delta):
    n = indptr.size - 1
    K = delta.shape[2]
    width = delta.shape[0] * delta.shape[1]
    rows = np.repeat(np.arange(n), np.diff(indptr))
    cols = clusters[indices] * delta.shape[1] + labels
    N = sp.csr_matrix((np.ones(indices.size), (rows, cols)), shape=(n, width))
    return np.asarray(N @ delta.reshape(width, K))


def tie_argmax(S, u, tol):
    best = S.max(axis=1, keepdims=True)
    tied = S >= best - tol
    m = tied.sum(axis=1)
    pick = np.minimum((u * m).astype(np.int64), m - 1)
    rank = np.cumsum(tied, axis=1) - 1
    return np.argmax(tied & (rank == pick[:, None]), axis=1).astype(np.int64)
