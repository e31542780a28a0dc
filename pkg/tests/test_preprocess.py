import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from learndag.core import DataError
from learndag.preprocess import (
    ALPHA_GRID,
    _poisson_ks,
    floor_counts,
    ks_objective,
    power_transform_ks,
    preprocess,
    quantile_normalize,
)


def raw_matrix(seed, n=80, p=6):
    rng = np.random.default_rng(seed)
    return rng.gamma(2.0, 3.0, size=(n, p)) * rng.uniform(0.3, 3.0, size=(n, 1))


def brute_ks(sample):
    """Sup distance checked on both sides of every jump of both CDFs."""
    x = np.sort(sample)
    lam = x.mean()
    pts = np.arange(0, int(x.max()) + 2)
    best = 0.0
    for t in pts:
        for side in (t - 1e-9, t):
            ecdf = np.searchsorted(x, side, side="right") / x.size
            best = max(best, abs(ecdf - stats.poisson.cdf(np.floor(side), lam)))
    return best


@given(st.integers(0, 10**6))
def test_quantiles_matched(seed):
    out, scales, dropped = quantile_normalize(raw_matrix(seed), 0.95)
    q = np.quantile(out, 0.95, axis=1)
    assert dropped == []
    np.testing.assert_allclose(q, np.median(np.quantile(raw_matrix(seed), 0.95, axis=1)), rtol=1e-9)
    assert scales.shape == (80,)


def test_quantiles_columns_axis():
    X = raw_matrix(1).T
    out, _, _ = quantile_normalize(X, 0.95, axis="columns")
    q = np.quantile(out, 0.95, axis=0)
    np.testing.assert_allclose(q, q[0], rtol=1e-9)


def test_zero_quantile_unit_dropped():
    X = raw_matrix(2)
    X[5] = 0.0
    out, scales, dropped = quantile_normalize(X)
    assert dropped == [5] and out.shape == (79, 6)


def test_quantile_validation():
    with pytest.raises(DataError):
        quantile_normalize([[-1.0, 2.0]])
    with pytest.raises(ValueError):
        quantile_normalize(raw_matrix(0), q=1.0)
    with pytest.raises(ValueError):
        quantile_normalize(raw_matrix(0), axis="both")


@pytest.mark.parametrize("seed", range(5))
def test_ks_matches_brute_force(seed):
    col = np.random.default_rng(seed).poisson(2.5, size=150).astype(float)
    assert _poisson_ks(col) == pytest.approx(brute_ks(col), abs=1e-12)


@given(st.integers(0, 10**6))
def test_alpha_in_range_and_beats_identity(seed):
    X, _, _ = quantile_normalize(raw_matrix(seed))
    _, alpha, ks, _ = power_transform_ks(X)
    assert 0 < alpha <= 1
    assert ks <= ks_objective(X, 1.0)[0]


def test_flooring_idempotent():
    X = raw_matrix(3)
    once = floor_counts(X).values
    assert np.array_equal(floor_counts(once).values, once)


def test_poisson_input_keeps_alpha_near_one():
    hits = 0
    for s in range(20):
        X = np.random.default_rng(s).poisson(5.0, size=(200, 5)).astype(float)
        _, alpha, _, _ = power_transform_ks(X)
        hits += alpha >= 0.8
    assert hits >= 18


def test_constant_columns_skipped():
    X = np.column_stack([np.full(50, 2.0), np.random.default_rng(0).poisson(3, 50)])
    ks, skipped = ks_objective(X, 1.0)
    assert skipped == [0] and np.isfinite(ks)
    with pytest.raises(DataError):
        power_transform_ks(np.full((10, 2), 3.0))


def test_grid():
    assert ALPHA_GRID[0] == 0.01 and ALPHA_GRID[-1] == 1.0 and len(ALPHA_GRID) == 100


def test_preprocess_end_to_end():
    counts, report = preprocess(raw_matrix(4), names=list("abcdef"))
    assert counts.names == tuple("abcdef")
    assert counts.values.min() >= 0
    assert 0 < report.alpha <= 1 and report.unit_axis == "rows"
    d = report.to_dict()
    assert set(d) >= {"alpha", "ks", "scales", "dropped_units"}
