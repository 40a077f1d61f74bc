"""Goodness-of-fit statistics: R^2, MAE, Pearson and Spearman correlation."""

from __future__ import annotations

import numpy as np

from .errors import DegenerateDataError, DomainError


def _paired(actual, predicted) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=np.float64).reshape(-1)
    p = np.asarray(predicted, dtype=np.float64).reshape(-1)
    if a.size != p.size:
        raise DomainError(f"length mismatch: {a.size} actual vs {p.size} predicted")
    if a.size == 0:
        raise DomainError("empty input")
    return a, p


def r_squared(actual, predicted) -> float:
    """1 - SS_res / SS_tot; undefined when the actual values have no variance."""
    a, p = _paired(actual, predicted)
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    if ss_tot == 0.0:
        raise DegenerateDataError("actual values have zero variance")
    ss_res = float(np.sum((a - p) ** 2))
    return 1.0 - ss_res / ss_tot


def mae(actual, predicted) -> float:
    """Mean absolute residual, in the units of the inputs."""
    a, p = _paired(actual, predicted)
    return float(np.mean(np.abs(a - p)))


def pearson(actual, predicted) -> float:
    a, p = _paired(actual, predicted)
    if a.size < 2:
        raise DomainError("need at least 2 points for a correlation")
    da = a - a.mean()
    dp = p - p.mean()
    denom = float(np.sqrt(np.sum(da * da) * np.sum(dp * dp)))
    if denom == 0.0:
        raise DegenerateDataError("zero variance in one of the inputs")
    return float(np.sum(da * dp) / denom)


def rank_average_ties(values) -> np.ndarray:
    """1-based ranks; tied values get the mean of the ranks they occupy."""
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    order = np.argsort(v, kind="mergesort")
    ranks = np.empty(v.size, dtype=np.float64)
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(actual, predicted) -> float:
    """Pearson correlation of the average-tie ranks."""
    a, p = _paired(actual, predicted)
    return pearson(rank_average_ties(a), rank_average_ties(p))
