"""Spectral initialization: density estimate, trimming, power iteration with
singular value thresholding, and greedy ball k-means on the embedding.

The stacked label matrix ``Abar = [A^1 ... A^L]`` (n rows, nL columns) is
never formed densely; all products go through :mod:`lsbm.kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import AbarOperator
from .model import LabeledGraph

RESIDUAL_TOL = 1e-12


def log_rounds(n: int) -> int:
    """``ceil(ln n)``, at least 1."""
    return max(1, math.ceil(math.log(n))) if n > 1 else 1


def power_rounds(n: int) -> int:
    """``ceil((ln n)^2)``, at least 1."""
    return max(1, math.ceil(math.log(n) ** 2)) if n > 1 else 1


def log_threshold(n: int, p_tilde: float) -> float:
    """``sqrt(n p) * max(ln(n p), 1)``; the guard keeps the rule meaningful when n p <= e."""
    npt = n * p_tilde
    if npt <= 0:
        return 0.0
    return math.sqrt(npt) * max(math.log(npt), 1.0)


# --------------------------------------------------------------------------
# density and trimming


def estimate_density(graph: LabeledGraph) -> float:
    """Stored labels divided by ``n (n - 1)``."""
    n = graph.n
    if n < 2:
        return 0.0
    return graph.n_edges / (n * (n - 1))


@dataclass(frozen=True)
class TrimResult:
    keep: np.ndarray      # boolean mask of retained nodes
    removed: np.ndarray   # removed ids, highest degree first
    p_tilde: float

    @property
    def gamma(self) -> np.ndarray:
        return np.flatnonzero(self.keep)


def trim(graph: LabeledGraph, p_tilde: float) -> TrimResult:
    """Drop the ``floor(n exp(-n p))`` highest-degree nodes (ties: lower id first)."""
    n = graph.n
    count = min(int(math.floor(n * math.exp(-n * p_tilde))), n)
    order = np.lexsort((np.arange(n), -graph.degrees))
    removed = order[:count]
    keep = np.ones(n, dtype=bool)
    keep[removed] = False
    return TrimResult(keep=keep, removed=removed, p_tilde=p_tilde)


def _trimmed_entries(graph: LabeledGraph, keep: np.ndarray):
    """CSR entries with both endpoints retained: (indptr, cols, edge ids, labels, rows)."""
    n = graph.n
    indptr = graph.indptr
    rows = np.repeat(np.arange(n), np.diff(indptr))
    cols = graph.indices
    mask = keep[rows] & keep[cols]
    rows, cols = rows[mask], cols[mask]
    new_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=new_ptr[1:])
    return new_ptr, cols, graph.csr_edge_ids[mask], graph.csr_labels[mask], rows


def abar_operator(graph: LabeledGraph, keep: np.ndarray, weights=None):
    """Stacked label operator restricted to retained nodes.

    ``weights``, if given, is a function of the trimmed entry arrays
    ``(rows, cols, labels, edge_ids)`` returning one weight per entry.
    """
    indptr, cols, eids, labels, rows = _trimmed_entries(graph, keep)
    w = None if weights is None else weights(rows, cols, labels, eids)
    col_index = (labels - 1) * graph.n + cols
    return AbarOperator(indptr, col_index, graph.n, graph.n * graph.L, w)


def noise_edge(graph: LabeledGraph, keep: np.ndarray, rng: np.random.Generator,
               q: int, draws: int = 3) -> float:
    """Estimated spectral edge of the noise part of ``Abar``.

    Every stored entry is replaced by a symmetric random sign times
    ``sqrt(1 - p_uw)``, where ``p_uw = d_u d_w / (2 m)`` is the per-label
    degree-product estimate of its probability.  The resulting matrix has
    the entrywise variance profile of the centred observations but no
    block structure; its top singular value (same power method, same
    number of rounds) is averaged over ``draws`` samples.
    """
    n, L = graph.n, graph.L
    indptr, cols, eids, labels, rows = _trimmed_entries(graph, keep)
    if cols.size == 0:
        return 0.0
    deg = np.zeros((L + 1, n))
    np.add.at(deg, (labels, rows), 1.0)
    two_m = deg.sum(axis=1)
    p_hat = deg[labels, rows] * deg[labels, cols] / two_m[labels]
    mag = np.sqrt(np.clip(1.0 - p_hat, 0.0, 1.0))
    values = []
    for _ in range(draws):
        signs = rng.choice(np.array([-1.0, 1.0]), size=graph.n_edges)
        op = AbarOperator(indptr, (labels - 1) * n + cols, n, n * L, signs[eids] * mag)
        it = PowerIterator(op, rng, q)
        d = it.next_direction()
        values.append(0.0 if d is None else d[1])
    return float(np.mean(values))


# --------------------------------------------------------------------------
# power iteration with deflation


class PowerIterator:
    """Successive approximate right-singular directions of an operator.

    Each call of :meth:`next_direction` starts from a fresh Gaussian vector,
    applies ``Abar^T Abar`` ``q`` times while projecting out every direction
    returned so far, and returns ``(x, ||Abar x||)``.  ``None`` signals that
    the residual fell below ``1e-12`` (the space is exhausted).
    """

    def __init__(self, op, rng: np.random.Generator, q: int):
        self.op = op
        self.rng = rng
        self.q = int(q)
        self.found: list[np.ndarray] = []

    def _project(self, x, B):
        if B is not None:
            x -= B @ (B.T @ x)
        return x

    def next_direction(self):
        dim = self.op.n_cols
        if len(self.found) >= dim:
            return None
        B = np.column_stack(self.found) if self.found else None
        x = self._project(self.rng.standard_normal(dim), B)
        nrm = np.linalg.norm(x)
        if nrm == 0:
            return None
        x /= nrm
        for _ in range(self.q):
            x = self._project(self.op.gram(x), B)
            nrm = np.linalg.norm(x)
            if nrm < RESIDUAL_TOL:
                return None
            x /= nrm
        # one more projection pass keeps the basis orthonormal to ~1e-15
        x = self._project(x, B)
        x /= np.linalg.norm(x)
        self.found.append(x)
        return x, float(np.linalg.norm(self.op.matvec(x)))


def power_svt(op, threshold: float, rng: np.random.Generator, q: int, k_max: int):
    """Accept directions while their singular estimate is at least ``threshold``.

    Returns ``(basis, chis)``: the accepted orthonormal columns and every
    computed estimate, including the first rejected one.
    """
    it = PowerIterator(op, rng, q)
    chis, accepted = [], []
    while len(accepted) < k_max:
        d = it.next_direction()
        if d is None:
            break
        chis.append(d[1])
        if d[1] < threshold:
            break
        accepted.append(d[0])
    basis = np.column_stack(accepted) if accepted else np.zeros((op.n_cols, 0))
    return basis, chis


@dataclass
class Spectrum:
    """Accepted directions and their embedding.

    ``k_hat`` counts directions passing the acceptance threshold.
    ``candidates`` holds directions whose estimate fell between the lower
    and the acceptance threshold; they are only used when the caller
    confirms them.  ``embedding[:, k]`` is ``Abar @ basis[:, k]`` and is zero
    on trimmed rows.
    """

    k_hat: int
    basis: np.ndarray
    embedding: np.ndarray
    singular_estimates: list
    thresholds: dict
    candidates: list = field(default_factory=list)
    iterator: PowerIterator | None = field(default=None, repr=False)
    op: object = field(default=None, repr=False)
    exhausted: bool = False

    def embedding_for(self, k: int) -> np.ndarray:
        """Embedding with the first ``k`` directions (accepted, then candidates)."""
        if k <= self.k_hat:
            return self.embedding[:, :k]
        extra = [c["embedding"] for c in self.candidates[: k - self.k_hat]]
        return np.column_stack([self.embedding] + extra)

    def next_candidate(self):
        """Compute one more direction above the lower threshold, or ``None``."""
        lower = self.thresholds.get("lower")
        if self.exhausted or lower is None or self.iterator is None:
            return None
        d = self.iterator.next_direction()
        if d is not None:
            self.singular_estimates.append(d[1])
        if d is None or d[1] < lower:
            self.exhausted = True
            return None
        cand = {"direction": d[0], "chi": d[1], "embedding": self.op.matvec(d[0])}
        self.candidates.append(cand)
        return cand


def embed_power_svt(graph: LabeledGraph, trim_result: TrimResult, rng: np.random.Generator,
                    k_max: int | None = None, threshold: str = "noise",
                    margin: float = 0.03, lower_margin: float = 0.03,
                    null_draws: int = 3, q: int | None = None) -> Spectrum:
    """Power method with singular value thresholding on the trimmed ``Abar``.

    ``threshold="log"`` accepts while ``chi >= sqrt(n p) max(ln(n p), 1)``.
    ``threshold="noise"`` estimates the noise edge ``e`` with
    :func:`noise_edge`, accepts while ``chi >= (1 + margin) e`` and keeps the
    first direction in ``[(1 - lower_margin) e, (1 + margin) e)`` as a
    candidate for later confirmation.
    """
    n = graph.n
    q = power_rounds(n) if q is None else int(q)
    k_max = math.ceil(math.sqrt(n)) if k_max is None else int(k_max)
    op = abar_operator(graph, trim_result.keep)
    if threshold == "log":
        accept = log_threshold(n, trim_result.p_tilde)
        thresholds = {"rule": "log", "accept": accept}
    elif threshold == "noise":
        edge = noise_edge(graph, trim_result.keep, rng, q, null_draws)
        accept = (1.0 + margin) * edge
        thresholds = {"rule": "noise", "edge": edge, "accept": accept,
                      "lower": (1.0 - lower_margin) * edge}
    else:
        raise ValueError(f"unknown threshold rule {threshold!r}")
    it = PowerIterator(op, rng, q)
    chis, accepted, candidates = [], [], []
    exhausted = True
    while len(accepted) < k_max:
        d = it.next_direction()
        if d is None:
            break
        chis.append(d[1])
        if d[1] < accept:
            lower = thresholds.get("lower")
            if lower is not None and d[1] >= lower:
                candidates.append({"direction": d[0], "chi": d[1],
                                   "embedding": op.matvec(d[0])})
                exhausted = False
            break
        accepted.append(d[0])
    basis = np.column_stack(accepted) if accepted else np.zeros((op.n_cols, 0))
    embedding = np.column_stack([op.matvec(b) for b in accepted]) if accepted else np.zeros((n, 0))
    return Spectrum(len(accepted), basis, embedding, chis, thresholds, candidates, it, op,
                    exhausted)


# --------------------------------------------------------------------------
# greedy ball k-means


@dataclass(frozen=True)
class InitClusters:
    labels: np.ndarray
    r_star: float
    t_star: int           # 1-based index of the selected round
    radii: np.ndarray
    dispersions: np.ndarray
    centroids: np.ndarray

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])


def _sqdist(E, C):
    return ((E[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def _dispersion(E, labels, C):
    return float(((E - C[labels]) ** 2).sum())


def _lloyd(E, labels, C, iters):
    K = C.shape[0]
    for _ in range(iters):
        C = C.copy()
        for k in range(K):
            members = labels == k
            if members.any():
                C[k] = E[members].mean(axis=0)
        new = np.argmin(_sqdist(E, C), axis=1)
        if np.array_equal(new, labels):
            break
        labels = new
    return labels, C


def kmeans_radii(mode: str, k: int, n: int, p_tilde: float, rounds: int,
                 noise_var: float | None = None) -> np.ndarray:
    """Squared ball radii of the successive rounds.

    ``"linear"`` uses ``t * p / 100``.  ``"noise"`` spans ``0.5 .. 8`` times
    ``k * noise_var`` geometrically, ``noise_var`` being the per-coordinate
    noise variance of the embedding.
    """
    if mode == "linear":
        return np.arange(1, rounds + 1) * p_tilde / 100.0
    if mode == "noise":
        if noise_var is None:
            raise ValueError("noise radii need the embedding noise variance")
        return np.geomspace(0.5, 8.0, rounds) * k * noise_var
    raise ValueError(f"unknown radius rule {mode!r}")


def kmeans_select(embedding: np.ndarray, keep: np.ndarray, k: int, rng: np.random.Generator,
                  radii, n_candidates: int | None = None, lloyd_iters: int = 25) -> InitClusters:
    """Greedy ball covering over several radii; keep the round of least dispersion.

    For each radius: reference nodes are picked greedily among a random
    candidate subset of the retained nodes, each covering the most not yet
    covered retained nodes within the radius (ties: lowest id); centroids
    are the means of the covered sets; all other nodes, trimmed ones
    included, go to the nearest centroid (ties: lowest index).  With
    ``lloyd_iters > 0`` each round is then polished by Lloyd iterations.
    """
    E = np.asarray(embedding, dtype=np.float64)
    n = E.shape[0]
    radii = np.asarray(radii, dtype=np.float64)
    gamma = np.flatnonzero(keep)
    if k < 1:
        raise ValueError("k must be at least 1")
    if k == 1:
        C = (E[gamma].mean(axis=0) if gamma.size else np.zeros(E.shape[1]))[None, :]
        labels = np.zeros(n, dtype=np.int64)
        r = _dispersion(E[gamma], labels[gamma], C)
        disp = np.full(radii.size, r)
        return InitClusters(labels, r, 1, radii, disp, C)
    if n_candidates is None:
        n_candidates = power_rounds(n)
    n_candidates = min(n_candidates, gamma.size)
    cand = np.sort(rng.choice(gamma, size=n_candidates, replace=False))
    EG = E[gamma]
    d2 = ((E[cand][:, None, :] - EG[None, :, :]) ** 2).sum(axis=2)
    best = None
    disp = np.empty(radii.size)
    for t, rad in enumerate(radii):
        Q = d2 <= rad
        taken = np.zeros(gamma.size, dtype=bool)
        lab_g = np.full(gamma.size, -1, dtype=np.int64)
        C = np.zeros((k, E.shape[1]))
        for c in range(k):
            cover = (Q & ~taken).sum(axis=1)
            j = int(np.argmax(cover))
            members = Q[j] & ~taken
            lab_g[members] = c
            taken |= members
            C[c] = EG[members].mean(axis=0) if members.any() else E[cand[j]]
        rest = ~taken
        if rest.any():
            lab_g[rest] = np.argmin(_sqdist(EG[rest], C), axis=1)
        if lloyd_iters > 0:
            lab_g, C = _lloyd(EG, lab_g, C, lloyd_iters)
        r = _dispersion(EG, lab_g, C)
        disp[t] = r
        if best is None or r < best[0]:
            best = (r, t, lab_g, C)
    r, t, lab_g, C = best
    labels = np.empty(n, dtype=np.int64)
    labels[gamma] = lab_g
    out = ~keep
    if out.any():
        labels[out] = np.argmin(_sqdist(E[out], C), axis=1)
    return InitClusters(labels, r, t + 1, radii, disp, C)
