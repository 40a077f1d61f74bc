"""Fit statistics against hand-computed cases and scipy."""

from __future__ import annotations

import math
import random

import numpy as np
import pytest
import scipy.stats

from diffwatt import mae, pearson, r_squared, spearman
from diffwatt.errors import DegenerateDataError, DomainError
from diffwatt.metrics import rank_average_ties


def test_r_squared_perfect_fit():
    assert r_squared([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 1.0


def test_r_squared_mean_predictor_is_zero():
    actual = [1.0, 2.0, 3.0, 10.0]
    mean = sum(actual) / len(actual)
    assert r_squared(actual, [mean] * 4) == pytest.approx(0.0, abs=1e-15)


def test_r_squared_three_point_case():
    # SS_res = 1, SS_tot = 2
    assert r_squared([1.0, 2.0, 3.0], [1.0, 2.0, 2.0]) == pytest.approx(0.5)


def test_r_squared_degenerate_actual():
    with pytest.raises(DegenerateDataError):
        r_squared([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])


def test_length_mismatch():
    with pytest.raises(DomainError):
        mae([1.0], [1.0, 2.0])
    with pytest.raises(DomainError):
        r_squared([1.0, 2.0], [1.0])


def test_mae_identity_and_offset():
    assert mae([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0
    assert mae([1.0, 2.0, 3.0], [1.5, 2.5, 3.5]) == pytest.approx(0.5)


def test_mae_five_point_case():
    actual = [1.0, 2.0, 3.0, 4.0, 5.0]
    predicted = [1.5, 1.0, 3.5, 3.0, 5.0]
    assert mae(actual, predicted) == pytest.approx(0.6)


def test_pearson_negated_sequence():
    x = [1.0, 2.0, 5.0, 7.0]
    assert pearson(x, [-v for v in x]) == pytest.approx(-1.0)


def test_pearson_three_point_case():
    assert pearson([1.0, 2.0, 3.0], [1.0, 2.0, 4.0]) == pytest.approx(0.9819805060619657)


def test_pearson_zero_variance():
    with pytest.raises(DegenerateDataError):
        pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


def test_spearman_strictly_increasing():
    assert spearman([1.0, 2.0, 3.0, 4.0], [10.0, 20.0, 30.0, 400.0]) == pytest.approx(1.0)


def test_spearman_tied_ranks():
    # ranks of x: 1, 2.5, 2.5, 4 -> correlation sqrt(0.9)
    assert spearman([1.0, 2.0, 2.0, 3.0], [1.0, 2.0, 3.0, 4.0]) == pytest.approx(
        math.sqrt(0.9)
    )


def test_spearman_invariant_under_monotone_transform():
    rng = random.Random(3)
    actual = [rng.uniform(-5, 5) for _ in range(40)]
    predicted = [rng.uniform(-5, 5) for _ in range(40)]
    base = spearman(actual, predicted)
    assert spearman(actual, [math.exp(p) for p in predicted]) == pytest.approx(base)
    assert spearman(actual, [p**3 for p in predicted]) == pytest.approx(base)


def test_rank_average_ties_values():
    ranks = rank_average_ties([10.0, 30.0, 20.0, 30.0])
    assert ranks.tolist() == [1.0, 3.5, 2.0, 3.5]


def test_against_scipy_on_random_data():
    rng = np.random.default_rng(11)
    for _ in range(5):
        a = rng.normal(size=60)
        p = 0.5 * a + rng.normal(size=60)
        assert pearson(a, p) == pytest.approx(scipy.stats.pearsonr(a, p)[0])
        assert spearman(a, p) == pytest.approx(scipy.stats.spearmanr(a, p)[0])
    # tie-heavy integer data
    a = rng.integers(0, 4, size=80).astype(float)
    p = rng.integers(0, 4, size=80).astype(float)
    assert spearman(a, p) == pytest.approx(scipy.stats.spearmanr(a, p)[0])
    assert rank_average_ties(a).tolist() == scipy.stats.rankdata(a).tolist()
