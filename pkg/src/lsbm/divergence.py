"""Instance divergence D(alpha, p) and the predictions built on it.

For two clusters ``i`` and ``j`` with label-distribution rows ``Pi[k]`` and
``Pj[k]`` (one row per third cluster ``k``), the cost of telling them apart
is

    D_L+ = min_y max( sum_k alpha_k kl(y_k, Pi_k), sum_k alpha_k kl(y_k, Pj_k) ).

The inner minimizer is a normalized geometric mixture
``y_k(lam) ∝ Pi_k**lam * Pj_k**(1-lam)``, so only the scalar ``lam`` has to be
found: with ``A(lam)`` and ``B(lam)`` the two weighted KL sums,
``A - B = sum_k alpha_k sum_l y ln(Pj/Pi)`` is nonincreasing in ``lam``
and the crossing is located by bisection.  At the crossing
``A = B = -sum_k alpha_k ln Z_k(lam)``, the weighted Chernoff
information.  All values are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import (BadBudget, ConfigError, DisjointSupportRow, LengthMismatch,
                         NoConvergence, OutOfRange, SingleCluster)
from .model import LsbmParams

DEFAULT_TOL = 1e-10
MAX_BISECT = 200
EQUAL_ROWS_TOL = 1e-14
BRACKET_TOL = 1e-15


@dataclass(frozen=True)
class DivergenceResult:
    """Outcome of a divergence computation.

    ``q`` is the equalizing K x (L+1) matrix (``None`` when the value is
    infinite).  ``pair`` is the minimizing cluster pair (0-based) and is
    ``None`` for a single-pair computation.
    """

    value: float
    lambda_star: float
    q: np.ndarray | None
    equalization_gap: float
    pair: tuple | None = None
    iterations: int = 0

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    def with_pair(self, pair) -> "DivergenceResult":
        return DivergenceResult(self.value, self.lambda_star, self.q,
                                self.equalization_gap, tuple(int(x) for x in pair), self.iterations)


def kl(y, q) -> float:
    """Kullback-Leibler divergence ``sum y ln(y/q)`` with ``0 ln 0 = 0``."""
    y = np.asarray(y, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if y.shape != q.shape:
        raise LengthMismatch(f"distributions have shapes {y.shape} and {q.shape}")
    for name, d in (("y", y), ("q", q)):
        if np.any(d < 0) or abs(d.sum() - 1.0) > 1e-10:
            raise ConfigError(f"{name} is not a probability vector")
    pos = y > 0
    if np.any(q[pos] == 0):
        return math.inf
    return float(np.sum(y[pos] * np.log(y[pos] / q[pos])))


def _kl_rows(y, P):
    """Row-wise KL for matrices; rows of ``y`` are supported inside ``P``'s support."""
    pos = y > 0
    ratio = np.ones_like(y)
    ratio[pos] = y[pos] / P[pos]
    return np.sum(np.where(pos, y * np.log(ratio), 0.0), axis=1)


def _mixture(Pi, Pj, lam):
    """(y, lnZ) of the normalized geometric mixture; y = 0 off the common support."""
    common = (Pi > 0) & (Pj > 0)
    logw = np.full(Pi.shape, -np.inf)
    logw[common] = lam * np.log(Pi[common]) + (1.0 - lam) * np.log(Pj[common])
    m = logw.max(axis=1)
    for k in np.flatnonzero(~np.isfinite(m)):
        raise DisjointSupportRow(int(k))
    w = np.exp(logw - m[:, None])
    s = w.sum(axis=1)
    return w / s[:, None], m + np.log(s)


def chernoff_profile(alpha, Pi, Pj, lam: float):
    """Geometric mixture ``y_lam`` and the weighted KL sums ``(A, B)`` toward Pi and Pj."""
    alpha = np.asarray(alpha, dtype=np.float64)
    Pi = np.asarray(Pi, dtype=np.float64)
    Pj = np.asarray(Pj, dtype=np.float64)
    if Pi.shape != Pj.shape or Pi.shape[0] != alpha.size:
        raise LengthMismatch("alpha, Pi and Pj shapes disagree")
    if not 0.0 <= lam <= 1.0:
        raise OutOfRange(f"lambda must lie in [0, 1], got {lam}")
    if lam == 1.0:
        y = Pi.copy()
    elif lam == 0.0:
        y = Pj.copy()
    else:
        y, _ = _mixture(Pi, Pj, lam)
    A = _safe_weighted_kl(alpha, y, Pi)
    B = _safe_weighted_kl(alpha, y, Pj)
    return y, A, B


def _safe_weighted_kl(alpha, y, P):
    if np.any((y > 0) & (P == 0)):
        return math.inf
    return _wsum(alpha, _kl_rows(y, P))


def _wsum(alpha, values):
    # exactly rounded, so the result does not depend on the cluster order
    return math.fsum((alpha * values).tolist())


def _state(alpha, Pi, Pj, lam):
    y, lnZ = _mixture(Pi, Pj, lam)
    A = _wsum(alpha, _kl_rows(y, Pi))
    B = _wsum(alpha, _kl_rows(y, Pj))
    g = -_wsum(alpha, lnZ)
    return y, A, B, g


def d_lplus(alpha, Pi, Pj, tol: float = DEFAULT_TOL) -> DivergenceResult:
    """Minimax confusion cost between two clusters with rows ``Pi`` and ``Pj``.

    Returns ``0`` (with ``lambda_star = 0.5``) for equal rows and ``inf``
    when some row pair has disjoint supports.  When the two sums cannot be
    equalized on the common support the supremum sits at an endpoint; the
    value is then reported together with its non-zero ``equalization_gap``.
    """
    if tol <= 0:
        raise ConfigError("tol must be positive")
    alpha = np.asarray(alpha, dtype=np.float64)
    Pi = np.asarray(Pi, dtype=np.float64)
    Pj = np.asarray(Pj, dtype=np.float64)
    if Pi.shape != Pj.shape or Pi.ndim != 2 or Pi.shape[0] != alpha.size:
        raise LengthMismatch("alpha, Pi and Pj shapes disagree")
    if np.all(np.abs(Pi - Pj) <= EQUAL_ROWS_TOL):
        return DivergenceResult(0.0, 0.5, Pi.copy(), 0.0)
    try:
        y, A, B, g = _state(alpha, Pi, Pj, 0.5)
    except DisjointSupportRow:
        return DivergenceResult(math.inf, 0.5, None, 0.0)

    lo, hi, lam = 0.0, 1.0, 0.5
    for it in range(1, MAX_BISECT + 1):
        gap = A - B
        if abs(gap) <= tol * max(1.0, g):
            return DivergenceResult(g, lam, y, abs(gap), iterations=it)
        if gap > 0:
            lo = lam
        else:
            hi = lam
        if hi - lo <= BRACKET_TOL:
            # Bracket exhausted.  Either the root is pinned to float
            # resolution, or the sums never cross inside (0, 1) and the
            # optimum is an endpoint; both report the residual honestly.
            return DivergenceResult(g, lam, y, abs(gap), iterations=it)
        lam = 0.5 * (lo + hi)
        y, A, B, g = _state(alpha, Pi, Pj, lam)
    raise NoConvergence(f"bisection did not reach tol={tol} in {MAX_BISECT} steps")


def divergence(params: LsbmParams, tol: float = DEFAULT_TOL) -> DivergenceResult:
    """Minimum of ``d_lplus`` over all unordered cluster pairs.

    Ties are resolved in favor of the lexicographically first pair.
    """
    K = params.K
    if K < 2:
        raise SingleCluster("the divergence needs at least two clusters")
    best = None
    for i in range(K):
        for j in range(i + 1, K):
            r = d_lplus(params.alpha, params.p[i], params.p[j], tol)
            if best is None or r.value < best.value:
                best = r.with_pair((i, j))
    return best


def predicted_misclassified(n: int, params: LsbmParams, tol: float = DEFAULT_TOL) -> float:
    """``n * exp(-n D)``, the error level below which no algorithm can go."""
    D = divergence(params, tol).value
    return 0.0 if math.isinf(D) else float(n * math.exp(-n * D))


def recovery_condition(n: int, s: float, params: LsbmParams, tol: float = DEFAULT_TOL) -> float:
    """``n D / ln(n / s)``; at least 1 means at most ``s`` errors are attainable."""
    if not 0 < s < n:
        raise BadBudget(f"budget s must satisfy 0 < s < n, got s={s}, n={n}")
    D = divergence(params, tol).value
    return float(n * D / math.log(n / s))


def i_star(n: float, a: float, b: float) -> float:
    """Order-1/2 Renyi divergence of Bernoulli(a/n) and Bernoulli(b/n), times two.

    Evaluated through the squared Hellinger distance to avoid cancellation:
    ``I* = -2 ln(1 - H^2)``.
    """
    if not (n > 0 and 0 <= a <= n and 0 <= b <= n):
        raise OutOfRange(f"need 0 <= a, b <= n, got n={n}, a={a}, b={b}")
    p, q = a / n, b / n
    d1 = math.sqrt(p) - math.sqrt(q)
    den = math.sqrt(1 - p) + math.sqrt(1 - q)
    d0 = (q - p) / den if den > 0 else 0.0
    h2 = 0.5 * (d1 * d1 + d0 * d0)
    if h2 >= 1.0:
        return math.inf
    return -2.0 * math.log1p(-h2)
