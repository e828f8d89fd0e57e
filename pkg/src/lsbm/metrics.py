"""Permutation-invariant error counting and run summaries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import EmptyInput, SizeMismatch


def confusion(truth, labels, k_true: int | None = None, k_hat: int | None = None) -> np.ndarray:
    """Counts of nodes per (true cluster, estimated cluster)."""
    truth = np.asarray(truth, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if truth.shape != labels.shape:
        raise SizeMismatch(f"truth has {truth.size} nodes, estimate has {labels.size}")
    if k_true is None:
        k_true = int(truth.max()) + 1 if truth.size else 0
    if k_hat is None:
        k_hat = int(labels.max()) + 1 if labels.size else 0
    C = np.zeros((k_true, k_hat), dtype=np.int64)
    np.add.at(C, (truth, labels), 1)
    return C


def misclassified(truth, labels) -> int:
    """Nodes left outside the best one-to-one matching of estimated to true clusters.

    The confusion matrix is zero-padded to a square so that surplus clusters
    on either side are matched with empty ones, and the optimal matching is
    found with the Hungarian method.
    """
    C = confusion(truth, labels)
    if C.size == 0:
        return 0
    m = max(C.shape)
    S = np.zeros((m, m), dtype=np.int64)
    S[: C.shape[0], : C.shape[1]] = C
    rows, cols = linear_sum_assignment(S, maximize=True)
    return int(C.sum() - S[rows, cols].sum())


@dataclass(frozen=True)
class Summary:
    count: int
    mean: float
    std: float
    min: float
    max: float
    median: float

    def as_dict(self) -> dict:
        return {"count": self.count, "mean": self.mean, "std": self.std,
                "min": self.min, "max": self.max, "median": self.median}


def summarize(values) -> Summary:
    """Mean, sample standard deviation (divisor n-1; 0 for one value), extremes and median."""
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise EmptyInput("cannot summarize an empty list")
    std = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    return Summary(int(x.size), float(x.mean()), std, float(x.min()), float(x.max()),
                   float(np.median(x)))

