"""Reproducible sampling of LSBM instances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, SizeMismatch
from .model import LabeledGraph, LsbmParams, check_assignment
from .rng import make_rng

SPARSE_PBAR = 1e-3
_CHUNK = 1 << 20


@dataclass(frozen=True)
class GenOptions:
    """``sizes=None`` draws memberships i.i.d. from ``alpha``; otherwise the
    cluster sizes are fixed and the memberships are a random permutation."""

    seed: int = 0
    sizes: tuple | None = None
    method: str = "auto"

    def __post_init__(self):
        if self.method not in ("auto", "dense", "sparse"):
            raise ConfigError(f"unknown sampling method {self.method!r}")
        if self.sizes is not None:
            object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))


def sample_assignment(params: LsbmParams, n: int, opts: GenOptions,
                      rng: np.random.Generator) -> np.ndarray:
    """Cluster index (0-based) of every node."""
    K = params.K
    if opts.sizes is None:
        cdf = np.cumsum(params.alpha)
        sigma = np.searchsorted(cdf, rng.random(n), side="right")
        return np.minimum(sigma, K - 1).astype(np.int64)
    sizes = np.asarray(opts.sizes, dtype=np.int64)
    if sizes.shape != (K,):
        raise SizeMismatch(f"{sizes.size} sizes given for K={K} clusters")
    if np.any(sizes <= 0):
        raise SizeMismatch("cluster sizes must be positive")
    if sizes.sum() != n:
        raise SizeMismatch(f"sizes sum to {sizes.sum()}, expected n={n}")
    return rng.permutation(np.repeat(np.arange(K, dtype=np.int64), sizes))


def _sample_dense(params: LsbmParams, sigma: np.ndarray, rng: np.random.Generator):
    """One uniform per pair, pairs visited in (u, v) lexicographic order."""
    n = sigma.size
    L = params.L
    cum = np.cumsum(params.p, axis=2)[:, :, :L]  # thresholds between labels
    us, vs, ls = [], [], []
    u = 0
    while u < n - 1:
        # gather whole rows until the chunk is full; the uniform stream is the
        # same as drawing row by row
        rows_end, count = u, 0
        while rows_end < n - 1 and (count == 0 or count + (n - rows_end - 1) <= _CHUNK):
            count += n - rows_end - 1
            rows_end += 1
        r = rng.random(count)
        lens = n - 1 - np.arange(u, rows_end)
        uu = np.repeat(np.arange(u, rows_end), lens)
        starts = np.repeat(np.cumsum(lens) - lens, lens)
        vv = uu + 1 + (np.arange(count) - starts)
        th = cum[sigma[uu], sigma[vv]]
        lab = (r[:, None] >= th).sum(axis=1)
        hit = lab > 0
        us.append(uu[hit])
        vs.append(vv[hit])
        ls.append(lab[hit])
        u = rows_end
    if not us:
        z = np.zeros(0, dtype=np.int64)
        return z, z, z
    return np.concatenate(us), np.concatenate(vs), np.concatenate(ls)


def _geometric_positions(total: int, q: float, rng: np.random.Generator) -> np.ndarray:
    """Indices in ``range(total)`` that succeed in independent Bernoulli(q) trials."""
    if q <= 0 or total == 0:
        return np.zeros(0, dtype=np.int64)
    if q >= 1:
        return np.arange(total, dtype=np.int64)
    out = []
    pos = -1
    expect = int(total * q + 10 * np.sqrt(total * q) + 16)
    while True:
        gaps = rng.geometric(q, size=expect)
        idx = pos + np.cumsum(gaps)
        keep = idx[idx < total]
        out.append(keep)
        if keep.size < idx.size:
            break
        pos = int(idx[-1])
    return np.concatenate(out).astype(np.int64)


def _sample_sparse(params: LsbmParams, sigma: np.ndarray, rng: np.random.Generator):
    """Geometric skipping over the pairs of each block, then a label draw."""
    K, L = params.K, params.L
    members = [np.flatnonzero(sigma == k) for k in range(K)]
    us, vs, ls = [], [], []
    for a in range(K):
        for b in range(a, K):
            ma, mb = members[a], members[b]
            q = 1.0 - params.p[a, b, 0]
            if a == b:
                m = ma.size
                total = m * (m - 1) // 2
                idx = _geometric_positions(total, q, rng)
                # row-major upper-triangle decoding of idx -> (i, j), i < j
                r = np.arange(max(m - 1, 0), dtype=np.int64)
                row_start = r * m - r * (r + 1) // 2
                i = np.searchsorted(row_start, idx, side="right") - 1
                j = i + 1 + idx - row_start[i]
                x, y = ma[i], ma[j]
            else:
                total = ma.size * mb.size
                idx = _geometric_positions(total, q, rng)
                x, y = ma[idx // mb.size], mb[idx % mb.size]
            if idx.size == 0:
                continue
            cond = params.p[a, b, 1:] / q
            lab = np.searchsorted(np.cumsum(cond)[:-1], rng.random(idx.size), side="right") + 1
            us.append(np.minimum(x, y))
            vs.append(np.maximum(x, y))
            ls.append(np.minimum(lab, L))
    if not us:
        z = np.zeros(0, dtype=np.int64)
        return z, z, z
    return np.concatenate(us), np.concatenate(vs), np.concatenate(ls)


def sample_graph(params: LsbmParams, sigma, rng: np.random.Generator,
                 method: str = "auto") -> LabeledGraph:
    """Draw one label per unordered pair and keep the non-zero ones.

    ``method="dense"`` consumes exactly one uniform per pair in (u, v)
    lexicographic order; ``"sparse"`` skips geometrically over unobserved
    pairs and is used automatically when every non-zero label probability is
    at most 1e-3.
    """
    sigma = check_assignment(sigma, np.asarray(sigma).size, params.K)
    n = sigma.size
    if method == "auto":
        method = "sparse" if params.p_bar <= SPARSE_PBAR else "dense"
    if method == "dense":
        u, v, lab = _sample_dense(params, sigma, rng)
        return LabeledGraph(n, params.L, u, v, lab)
    if method == "sparse":
        u, v, lab = _sample_sparse(params, sigma, rng)
        return LabeledGraph.from_edges(n, params.L, u, v, lab)
    raise ConfigError(f"unknown sampling method {method!r}")


def generate(params: LsbmParams, n: int, opts: GenOptions | None = None):
    """Sample ``(sigma, graph)`` from a single seeded stream."""
    opts = opts or GenOptions()
    rng = make_rng(opts.seed)
    sigma = sample_assignment(params, n, opts, rng)
    return sigma, sample_graph(params, sigma, rng, opts.method)
