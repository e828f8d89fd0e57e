"""Parameter estimation, likelihood refinement and the end-to-end clustering run."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .divergence import d_lplus
from .exceptions import ConfigError
from .model import LabeledGraph
from .rng import make_rng
from .spectral import (InitClusters, Spectrum, embed_power_svt, estimate_density, kmeans_radii,
                       kmeans_select, log_rounds, power_rounds, trim)

TIE_TOL = 1e-12


# --------------------------------------------------------------------------
# estimation


@dataclass(frozen=True)
class EstimatedParams:
    p_hat: np.ndarray       # K x K x (L+1), smoothed
    log_p_hat: np.ndarray
    counts: np.ndarray      # ordered-pair label counts, label 0 included
    denominators: np.ndarray

    @property
    def K(self) -> int:
        return int(self.p_hat.shape[0])


def block_label_counts(graph: LabeledGraph, labels: np.ndarray, K: int) -> np.ndarray:
    """Ordered-pair counts of each non-zero label between every pair of clusters."""
    L = graph.L
    cu, cv = labels[graph.u], labels[graph.v]
    width = K * K * (L + 1)
    flat = np.bincount((cu * K + cv) * (L + 1) + graph.labels, minlength=width)
    flat += np.bincount((cv * K + cu) * (L + 1) + graph.labels, minlength=width)
    return flat.reshape(K, K, L + 1)


def estimate_label_probs(graph: LabeledGraph, labels, K: int,
                         floor: float | None = None) -> EstimatedParams:
    """Empirical label frequencies between clusters.

    Off-diagonal blocks divide by ``|S_i||S_j|``, diagonal blocks by
    ``|S_i|(|S_i|-1)`` (ordered pairs without self pairs).  Entries are
    floored at ``floor`` (default ``1/n^2``) and each distribution is
    renormalized; blocks without any pair get the uniform distribution.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n, L = graph.n, graph.L
    floor = 1.0 / n**2 if floor is None else float(floor)
    sizes = np.bincount(labels, minlength=K).astype(np.float64)
    den = np.outer(sizes, sizes) - np.diag(sizes)
    counts = block_label_counts(graph, labels, K).astype(np.float64)
    counts[:, :, 0] = den - counts[:, :, 1:].sum(axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = counts / den[:, :, None]
    empty = den <= 0
    p[empty] = 1.0 / (L + 1)
    p = np.maximum(p, floor)
    p /= p.sum(axis=2, keepdims=True)
    return EstimatedParams(p, np.log(p), counts, den)


# --------------------------------------------------------------------------
# scores and refinement


def likelihood_scores(graph: LabeledGraph, labels, est: EstimatedParams, v: int) -> np.ndarray:
    """Plug-in log-likelihood of node ``v`` joining each cluster (reference version)."""
    labels = np.asarray(labels, dtype=np.int64)
    K = est.K
    lp = est.log_p_hat
    c = np.bincount(labels, minlength=K).astype(np.float64)
    c[labels[v]] -= 1.0
    score = lp[:, :, 0] @ c
    lo, hi = graph.indptr[v], graph.indptr[v + 1]
    for w, lab in zip(graph.indices[lo:hi], graph.csr_labels[lo:hi]):
        i = labels[w]
        score += lp[:, i, lab] - lp[:, i, 0]
    return score


def score_all(graph: LabeledGraph, labels, est: EstimatedParams) -> np.ndarray:
    """Scores of every node for every cluster, ``O(K (n + |edges|))``."""
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    K = est.K
    lp = est.log_p_hat
    lp0 = lp[:, :, 0]
    sizes = np.bincount(labels, minlength=K).astype(np.float64)
    # delta[c, l, k] = log p(k, c, l) - log p(k, c, 0)
    delta = np.ascontiguousarray((lp - lp0[:, :, None]).transpose(1, 2, 0))
    S = kernels.score_pass(graph.indptr, graph.indices, graph.csr_labels, labels, delta)
    S += (lp0 @ sizes)[None, :] - lp0.T[labels]
    return S


def refine_once(graph: LabeledGraph, labels, est: EstimatedParams,
                rng: np.random.Generator) -> np.ndarray:
    """Move every node to its best cluster against the current partition.

    Scores within ``1e-12`` of the best tie; the winner among tied clusters
    is chosen with one uniform per node, drawn in node order.
    """
    S = score_all(graph, labels, est)
    u = rng.random(graph.n)
    return kernels.tie_argmax(np.ascontiguousarray(S), u, TIE_TOL)


# --------------------------------------------------------------------------
# orchestration


@dataclass(frozen=True)
class IacOptions:
    """Tuning knobs; ``None`` picks the size-dependent default.

    ``threshold`` and ``radius`` select the singular value and ball radius
    rules ("noise", or "log" and "linear"; see :mod:`lsbm.spectral`).  With the noise
    rule, borderline directions are kept only when the refined clustering
    they induce separates every pair of clusters by ``n * D_L+ >= min_nd``
    (``order_check``).
    """

    k_max: int | None = None
    smoothing: float | None = None
    iterations: int | None = None
    reestimate: bool = False
    threshold: str = "noise"
    margin: float = 0.03
    lower_margin: float = 0.03
    null_draws: int = 3
    radius: str = "noise"
    lloyd_iters: int = 25
    order_check: bool = True
    min_nd: float = 5.0
    max_candidates: int = 2

    def __post_init__(self):
        if self.threshold not in ("noise", "log"):
            raise ConfigError(f"unknown threshold rule {self.threshold!r}")
        if self.radius not in ("noise", "linear"):
            raise ConfigError(f"unknown radius rule {self.radius!r}")
        if self.k_max is not None and self.k_max < 1:
            raise ConfigError("k_max must be positive")
        if self.iterations is not None and self.iterations < 0:
            raise ConfigError("iterations must be non-negative")


@dataclass
class ClusteringResult:
    labels: np.ndarray
    k_hat: int
    initial: InitClusters | None
    errors_trace: list
    p_hat: EstimatedParams | None
    timings: dict
    spectrum: Spectrum | None = None
    k_svt: int = 0
    order_scores: list = field(default_factory=list)

    @property
    def initial_labels(self) -> np.ndarray:
        return self.labels if self.initial is None else self.initial.labels

    def clusters(self) -> list:
        """Node ids of each cluster."""
        return [np.flatnonzero(self.labels == k).tolist() for k in range(self.k_hat)]


def _single_cluster(n, timings, spectrum=None):
    return ClusteringResult(np.zeros(n, dtype=np.int64), 1, None, [], None, timings, spectrum)


def _min_pair_nd(graph, labels, k, floor):
    """Smallest ``n * D_L+`` between estimated clusters of a partition."""
    n = graph.n
    sizes = np.bincount(labels, minlength=k)
    if np.any(sizes == 0):
        return 0.0
    est = estimate_label_probs(graph, labels, k, floor)
    alpha = sizes / n
    return min(n * d_lplus(alpha, est.p_hat[i], est.p_hat[j], 1e-8).value
               for i in range(k) for j in range(i + 1, k))


def run_iac(graph: LabeledGraph, seed: int = 0, opts: IacOptions | None = None) -> ClusteringResult:
    """Spectral initialization followed by likelihood refinement.

    Stages: density estimate, trimming, power method with thresholding,
    greedy ball k-means, one estimate of the label probabilities, then
    ``ceil(ln n)`` synchronous refinement passes.
    """
    opts = opts or IacOptions()
    n = graph.n
    if n < 2:
        raise ConfigError("clustering needs at least two nodes")
    rng = make_rng(seed)
    timings = {}
    clock = time.perf_counter()

    def lap(name):
        nonlocal clock
        now = time.perf_counter()
        timings[name] = timings.get(name, 0.0) + 1000.0 * (now - clock)
        clock = now

    p_tilde = estimate_density(graph)
    tr = trim(graph, p_tilde)
    lap("trim_ms")
    if p_tilde <= 0 or not tr.keep.any():
        return _single_cluster(n, timings)

    spec = embed_power_svt(graph, tr, rng, k_max=opts.k_max, threshold=opts.threshold,
                           margin=opts.margin, lower_margin=opts.lower_margin,
                           null_draws=opts.null_draws)
    lap("spectral_ms")
    k_svt = spec.k_hat
    if k_svt == 0:
        return _single_cluster(n, timings, spec)

    T = log_rounds(n)
    iterations = T if opts.iterations is None else opts.iterations
    if spec.thresholds["rule"] == "noise":
        noise_var = spec.thresholds["edge"] ** 2 / (4.0 * n)
    else:
        noise_var = None

    def cluster_at(k):
        E = spec.embedding_for(k)
        radii = kmeans_radii(opts.radius, k, n, p_tilde, T, noise_var)
        init = kmeans_select(E, tr.keep, k, rng, radii, power_rounds(n), opts.lloyd_iters)
        lap("kmeans_ms")
        est = estimate_label_probs(graph, init.labels, k, opts.smoothing)
        labels = init.labels
        trace = []
        for _ in range(iterations):
            new = refine_once(graph, labels, est, rng)
            trace.append(int(np.count_nonzero(new != labels)))
            labels = new
            if opts.reestimate:
                est = estimate_label_probs(graph, labels, k, opts.smoothing)
        lap("refine_ms")
        return init, est, labels, trace

    init, est, labels, trace = cluster_at(k_svt)
    k_hat = k_svt
    scores = []
    if opts.order_check and spec.thresholds["rule"] == "noise":
        for c in range(opts.max_candidates):
            if c >= len(spec.candidates) and spec.next_candidate() is None:
                break
            lap("spectral_ms")
            k = k_svt + c + 1
            res = cluster_at(k)
            nd = _min_pair_nd(graph, res[2], k, opts.smoothing)
            lap("order_check_ms")
            scores.append(nd)
            if nd < opts.min_nd:
                break
            init, est, labels, trace = res
            k_hat = k
    return ClusteringResult(labels, k_hat, init, trace, est, timings, spec, k_svt, scores)
