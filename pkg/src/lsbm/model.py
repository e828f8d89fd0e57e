"""Domain types for the labeled stochastic block model.

``LsbmParams`` holds the cluster proportions ``alpha`` (length K) and the
label tensor ``p`` of shape ``(K, K, L+1)``; label 0 is the implicit
"nothing observed" label.  ``LabeledGraph`` stores only the observed
(non-zero) labels as sorted ``u < v`` triples.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .exceptions import DegenerateP, GraphFormatError, InvalidParams

PROB_TOL = 1e-12


# --------------------------------------------------------------------------
# parameter violations


@dataclass(frozen=True)
class NonStochasticRow:
    i: int
    j: int
    total: float

    def __str__(self):
        return f"NonStochasticRow({self.i},{self.j}): labels sum to {self.total!r}"


@dataclass(frozen=True)
class AsymmetricTensor:
    i: int
    j: int
    label: int

    def __str__(self):
        return f"AsymmetricTensor({self.i},{self.j},{self.label})"


@dataclass(frozen=True)
class BadAlpha:
    reason: str

    def __str__(self):
        return f"BadAlpha: {self.reason}"


@dataclass(frozen=True)
class BadEntry:
    i: int
    j: int
    label: int
    value: float

    def __str__(self):
        return f"BadEntry({self.i},{self.j},{self.label}) = {self.value!r} outside [0,1]"


@dataclass(frozen=True)
class BadShape:
    reason: str

    def __str__(self):
        return f"BadShape: {self.reason}"


# --------------------------------------------------------------------------
# parameters


def _frozen(a, dtype=np.float64):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LsbmParams:
    """Cluster proportions and label probabilities.

    ``p[i, j, l]`` is the probability that a pair with one endpoint in
    cluster ``i`` and the other in ``j`` carries label ``l``.
    """

    alpha: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", _frozen(self.alpha))
        object.__setattr__(self, "p", _frozen(self.p))

    @property
    def K(self) -> int:
        return int(self.alpha.shape[0])

    @property
    def L(self) -> int:
        return int(self.p.shape[2]) - 1 if self.p.ndim == 3 else 0

    @property
    def p_bar(self) -> float:
        """Largest probability of any non-zero label."""
        if self.L < 1:
            return 0.0
        return float(self.p[:, :, 1:].max())

    @classmethod
    def binary(cls, alpha, P) -> "LsbmParams":
        """Single-label model from a K x K matrix of edge probabilities."""
        P = np.asarray(P, dtype=np.float64)
        return cls(alpha, np.stack([1.0 - P, P], axis=-1))

    def permuted(self, perm) -> "LsbmParams":
        """Relabel clusters: new cluster ``k`` is old cluster ``perm[k]``."""
        perm = np.asarray(perm)
        return LsbmParams(self.alpha[perm], self.p[np.ix_(perm, perm)])

    def __eq__(self, other):
        if not isinstance(other, LsbmParams):
            return NotImplemented
        return (self.alpha.shape == other.alpha.shape and self.p.shape == other.p.shape
                and np.array_equal(self.alpha, other.alpha) and np.array_equal(self.p, other.p))

    __hash__ = None

    def to_dict(self) -> dict:
        return {"K": self.K, "L": self.L, "alpha": self.alpha.tolist(), "p": self.p.tolist()}

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def from_dict(cls, doc: dict) -> "LsbmParams":
        """Parse, validate and tolerance-normalize a parameter document."""
        try:
            K = int(doc["K"])
            L = int(doc["L"])
            alpha = np.asarray(doc["alpha"], dtype=np.float64)
            p = np.asarray(doc["p"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidParams([BadShape(f"malformed parameter document: {exc}")]) from exc
        problems = []
        if alpha.shape != (K,):
            problems.append(BadShape(f"alpha has shape {alpha.shape}, expected ({K},)"))
        if p.shape != (K, K, L + 1):
            problems.append(BadShape(f"p has shape {p.shape}, expected ({K},{K},{L + 1})"))
        if problems:
            raise InvalidParams(problems)
        params = validate_params(cls(alpha, p))
        # normalization only ever removes sub-tolerance rounding
        alpha = params.alpha / params.alpha.sum()
        p = params.p / params.p.sum(axis=2, keepdims=True)
        p = 0.5 * (p + p.transpose(1, 0, 2))
        params = cls(alpha, p)
        freq = np.einsum("i,j,ijl->l", params.alpha, params.alpha, params.p)
        if L >= 1 and freq[1:].max() > freq[0]:
            warnings.warn("label 0 is not the most frequent label under (alpha, p)", stacklevel=2)
        return params

    @classmethod
    def load(cls, path) -> "LsbmParams":
        with open(path, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidParams([BadShape(f"not valid JSON: {exc}")]) from exc
        return cls.from_dict(doc)


def param_violations(params: LsbmParams) -> list:
    """Every violated invariant of ``params`` (empty list when valid)."""
    alpha, p = params.alpha, params.p
    out = []
    if alpha.ndim != 1 or alpha.size == 0:
        return [BadShape(f"alpha must be a non-empty vector, got shape {alpha.shape}")]
    K = alpha.size
    if p.ndim != 3 or p.shape[0] != K or p.shape[1] != K or p.shape[2] < 2:
        return [BadShape(f"p must have shape ({K},{K},L+1) with L >= 1, got {p.shape}")]
    if not np.all(np.isfinite(alpha)) or np.any(alpha <= 0):
        out.append(BadAlpha("entries must be strictly positive"))
    if abs(alpha.sum() - 1.0) > PROB_TOL:
        out.append(BadAlpha(f"entries sum to {float(alpha.sum())!r}"))
    bad = np.argwhere(~((p >= 0) & (p <= 1)))
    out.extend(BadEntry(int(i), int(j), int(l), float(p[i, j, l])) for i, j, l in bad)
    totals = p.sum(axis=2)
    for i, j in np.argwhere(~(np.abs(totals - 1.0) <= PROB_TOL)):
        out.append(NonStochasticRow(int(i), int(j), float(totals[i, j])))
    asym = np.abs(p - p.transpose(1, 0, 2)) > PROB_TOL
    for i, j, l in np.argwhere(asym):
        if i < j:
            out.append(AsymmetricTensor(int(i), int(j), int(l)))
    return out


def validate_params(params: LsbmParams) -> LsbmParams:
    """Return ``params`` unchanged, or raise ``InvalidParams`` listing every violation."""
    problems = param_violations(params)
    if problems:
        raise InvalidParams(problems)
    return params


# --------------------------------------------------------------------------
# assumption diagnostics


@dataclass(frozen=True)
class AssumptionReport:
    eta: float
    eps: float
    kappa: float
    kappa_ok: bool
    p_bar: float


def assumption_report(params: LsbmParams, n: int, kappa: float) -> AssumptionReport:
    """Ratio bound, separation and density-floor diagnostics.

    ``eta`` is the largest ratio ``p[i,j,l] / p[i,k,l]`` (all labels
    including 0); a zero denominator under a positive numerator gives
    ``inf``.  ``eps`` is the smallest squared row separation over the
    non-zero labels, normalized by ``p_bar**2`` (``inf`` when K = 1).
    """
    p = params.p
    p_bar = params.p_bar
    if p_bar <= 0:
        raise DegenerateP("all non-zero label probabilities vanish")
    # num[i, j, k, l] / den[i, j, k, l] = p[i,j,l] / p[i,k,l]
    num = p[:, :, None, :]
    den = p[:, None, :, :]
    num_b, den_b = np.broadcast_arrays(num, den)
    if np.any((den_b == 0) & (num_b > 0)):
        eta = math.inf
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(den_b > 0, num_b / np.where(den_b > 0, den_b, 1.0), 1.0)
        eta = max(1.0, float(ratios.max()))
    K = params.K
    if K < 2:
        eps = math.inf
    else:
        q = p[:, :, 1:]
        # exactly rounded sums keep eps invariant under cluster relabeling
        eps = min(math.fsum(((q[i] - q[j]) ** 2).ravel().tolist())
                  for i in range(K) for j in range(K) if i != j) / p_bar**2
    kappa_ok = bool(n * p[:, :, 1:].min() >= (n * p_bar) ** kappa)
    return AssumptionReport(eta=eta, eps=eps, kappa=float(kappa), kappa_ok=kappa_ok, p_bar=p_bar)


# --------------------------------------------------------------------------
# graphs


@dataclass(frozen=True, eq=False)
class LabeledGraph:
    """Observed non-zero labels of an undirected graph on ``n`` nodes.

    ``u``, ``v`` and ``labels`` are parallel arrays with ``u < v`` and pairs
    sorted lexicographically.  Use :meth:`from_edges` to build one from
    unsorted input.
    """

    n: int
    L: int
    u: np.ndarray
    v: np.ndarray
    labels: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "u", _frozen(self.u, np.int64))
        object.__setattr__(self, "v", _frozen(self.v, np.int64))
        object.__setattr__(self, "labels", _frozen(self.labels, np.int64))
        self._check()

    def _check(self):
        n, u, v, lab = self.n, self.u, self.v, self.labels
        if n < 0 or self.L < 1:
            raise GraphFormatError(f"need n >= 0 and L >= 1, got n={n}, L={self.L}")
        if not (u.shape == v.shape == lab.shape and u.ndim == 1):
            raise GraphFormatError("edge arrays must be 1-d and of equal length")
        if u.size == 0:
            return
        if u.min() < 0 or v.max() >= n:
            raise GraphFormatError("node id out of range")
        if np.any(u >= v):
            raise GraphFormatError("every stored pair must satisfy u < v (no self pairs)")
        if lab.min() < 1 or lab.max() > self.L:
            raise GraphFormatError(f"labels must lie in 1..{self.L}")
        key = u * n + v
        if np.any(np.diff(key) <= 0):
            raise GraphFormatError("pairs must be unique and sorted by (u, v)")

    @classmethod
    def from_edges(cls, n: int, L: int, u, v, labels) -> "LabeledGraph":
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        order = np.lexsort((hi, lo))
        return cls(n, L, lo[order], hi[order], np.asarray(labels, dtype=np.int64)[order])

    @classmethod
    def empty(cls, n: int, L: int = 1) -> "LabeledGraph":
        z = np.zeros(0, dtype=np.int64)
        return cls(n, L, z, z, z)

    @property
    def n_edges(self) -> int:
        return int(self.u.size)

    def __len__(self):
        return self.n_edges

    def __eq__(self, other):
        if not isinstance(other, LabeledGraph):
            return NotImplemented
        return (self.n == other.n and self.L == other.L and np.array_equal(self.u, other.u)
                and np.array_equal(self.v, other.v) and np.array_equal(self.labels, other.labels))

    __hash__ = None

    def _csr(self):
        """Symmetric adjacency in CSR form: (indptr, indices, labels, edge ids), rows sorted."""
        if "csr" not in self._cache:
            n = self.n
            rows = np.concatenate([self.u, self.v])
            cols = np.concatenate([self.v, self.u])
            labs = np.concatenate([self.labels, self.labels])
            order = np.lexsort((cols, rows))
            indptr = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
            indices = np.ascontiguousarray(cols[order])
            lab = np.ascontiguousarray(labs[order])
            eid = np.ascontiguousarray(order % max(self.n_edges, 1))
            for a in (indptr, indices, lab, eid):
                a.setflags(write=False)
            self._cache["csr"] = (indptr, indices, lab, eid)
        return self._cache["csr"]

    @property
    def indptr(self) -> np.ndarray:
        return self._csr()[0]

    @property
    def indices(self) -> np.ndarray:
        return self._csr()[1]

    @property
    def csr_labels(self) -> np.ndarray:
        return self._csr()[2]

    @property
    def csr_edge_ids(self) -> np.ndarray:
        """Position in ``u``/``v``/``labels`` of every CSR entry."""
        return self._csr()[3]

    @cached_property
    def degrees(self) -> np.ndarray:
        """Number of observed labels incident to each node."""
        return np.diff(self.indptr)

    def adjacency(self, label: int | None = None) -> sp.csr_matrix:
        """Sparse 0/1 matrix of one label, or of all non-zero labels when ``label`` is None."""
        mask = slice(None) if label is None else (self.labels == label)
        u, v = self.u[mask], self.v[mask]
        data = np.ones(2 * u.size)
        return sp.csr_matrix((data, (np.concatenate([u, v]), np.concatenate([v, u]))),
                             shape=(self.n, self.n))

    def dense_labels(self) -> np.ndarray:
        """n x n matrix of labels (0 where nothing is observed). Small graphs only."""
        M = np.zeros((self.n, self.n), dtype=np.int64)
        M[self.u, self.v] = self.labels
        M[self.v, self.u] = self.labels
        return M

    # ---- text format -----------------------------------------------------

    def to_text(self) -> str:
        head = f"{self.n} {self.L}\n"
        if self.n_edges == 0:
            return head
        body = np.column_stack([self.u, self.v, self.labels])
        return head + "\n".join(f"{a} {b} {c}" for a, b, c in body.tolist()) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "LabeledGraph":
        lines = text.splitlines()
        if not lines:
            raise GraphFormatError("empty graph file")
        head = lines[0].split()
        if len(head) != 2:
            raise GraphFormatError("first line must be 'n L'")
        try:
            n, L = int(head[0]), int(head[1])
            body = [ln for ln in lines[1:] if ln.strip()]
            arr = (np.array([[int(x) for x in ln.split()] for ln in body], dtype=np.int64)
                   if body else np.zeros((0, 3), dtype=np.int64))
        except ValueError as exc:
            raise GraphFormatError(f"non-integer token: {exc}") from exc
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise GraphFormatError("edge lines must be 'u v label'")
        return cls(n, L, arr[:, 0], arr[:, 1], arr[:, 2])

    @classmethod
    def load(cls, path) -> "LabeledGraph":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())


def check_assignment(sigma, n: int, K: int) -> np.ndarray:
    """Validate a 0-based assignment vector of length ``n`` with indices in ``0..K-1``."""
    sigma = np.asarray(sigma)
    if sigma.shape != (n,):
        raise GraphFormatError(f"assignment has shape {sigma.shape}, expected ({n},)")
    if n and (sigma.min() < 0 or sigma.max() >= K):
        raise GraphFormatError(f"assignment indices must lie in 0..{K - 1}")
    return sigma.astype(np.int64)
