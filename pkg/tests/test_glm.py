import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import optimize, stats

from learndag.core import CountMatrix
from learndag.glm import (
    NumericOverflowError,
    SingularFitError,
    fit_node,
    fit_poisson,
    node_loglik,
    node_loglik_grad,
    wald_z,
)


def poisson_design(rng, n, q, scale=0.15):
    X = rng.poisson(2.0, size=(n, q)).astype(float)
    beta = np.concatenate(([0.4], rng.uniform(-scale, scale, size=q)))
    y = rng.poisson(np.exp(beta[0] + X @ beta[1:]))
    return X, y


def test_loglik_term_by_term(rng):
    X, y = poisson_design(rng, 50, 3)
    coef = np.array([0.3, 0.1, -0.2, 0.05])
    mu = np.exp(coef[0] + X @ coef[1:])
    oracle = stats.poisson.logpmf(y, mu).sum()
    assert node_loglik(y, X, coef) == pytest.approx(oracle, rel=1e-12)


def test_loglik_intercept_only():
    y = np.array([0, 1, 2, 5])
    assert node_loglik(y, None, [0.0]) == pytest.approx(stats.poisson.logpmf(y, 1.0).sum())


def test_loglik_overflow():
    with pytest.raises(NumericOverflowError):
        node_loglik([1, 2], np.array([[1.0], [2.0]]), [0.0, 800.0])


def test_loglik_coefficient_count():
    with pytest.raises(ValueError):
        node_loglik([1, 2], None, [0.0, 1.0])


def test_intercept_only_mle_is_log_mean(rng):
    y = rng.poisson(3.7, size=300)
    fit = fit_poisson(y)
    assert fit.converged
    assert fit.intercept == pytest.approx(np.log(y.mean()), abs=1e-6)


def test_mle_matches_generic_optimizer(rng):
    X, y = poisson_design(rng, 400, 3)
    fit = fit_poisson(y, X)

    def nll(b):
        return -node_loglik(y, X, b)

    ref = optimize.minimize(nll, np.zeros(4), jac=lambda b: -node_loglik_grad(y, X, b),
                            method="BFGS", options={"gtol": 1e-10})
    np.testing.assert_allclose(fit.coef, ref.x, atol=1e-5)
    assert fit.loglik == pytest.approx(-ref.fun, rel=1e-10)


def test_gradient_matches_finite_differences(rng):
    X, y = poisson_design(rng, 80, 2)
    b = np.array([0.2, 0.1, -0.1])
    h = 1e-6
    fd = np.array([(node_loglik(y, X, b + h * e) - node_loglik(y, X, b - h * e)) / (2 * h)
                   for e in np.eye(3)])
    np.testing.assert_allclose(node_loglik_grad(y, X, b), fd, rtol=1e-6)


def test_standard_errors_from_observed_information(rng):
    X, y = poisson_design(rng, 500, 2)
    fit = fit_poisson(y, X)
    D = np.column_stack([np.ones(len(y)), X])
    mu = np.exp(D @ fit.coef)
    cov = np.linalg.inv(D.T @ (mu[:, None] * D))
    np.testing.assert_allclose(fit.std_errors, np.sqrt(np.diag(cov))[1:], rtol=1e-6)
    assert wald_z(fit, 0) == pytest.approx(fit.slopes[0] / fit.std_errors[0])


def test_converged_gradient_is_small(rng):
    X, y = poisson_design(rng, 2000, 5)
    fit = fit_poisson(y, X)
    assert fit.converged
    assert np.max(np.abs(node_loglik_grad(y, X, fit.coef))) <= 1e-8 * len(y) * 10


def test_history_is_monotone(rng):
    X, y = poisson_design(rng, 300, 4, scale=0.3)
    fit = fit_poisson(y, X)
    assert np.all(np.diff(fit.history) >= -1e-9)
    assert fit.history[-1] == pytest.approx(fit.loglik)


def test_all_zero_response():
    y = np.zeros(40)
    fit = fit_poisson(y, np.arange(40.0)[:, None] % 3)
    assert not fit.converged
    assert fit.intercept == pytest.approx(np.log(1 / 80))
    assert np.all(fit.slopes == 0)


def test_collinear_design_is_singular(rng):
    x = rng.poisson(2.0, size=100).astype(float)
    y = rng.poisson(2.0, size=100)
    with pytest.raises(SingularFitError):
        fit_poisson(y, np.column_stack([x, 2 * x]))


def test_constant_covariate_is_singular(rng):
    y = rng.poisson(2.0, size=100)
    with pytest.raises(SingularFitError):
        fit_poisson(y, np.full((100, 1), 3.0))


def test_too_few_samples():
    with pytest.raises(SingularFitError):
        fit_poisson([1, 2], np.array([[1.0], [2.0]]))


def test_start_shape_checked(rng):
    X, y = poisson_design(rng, 50, 2)
    with pytest.raises(ValueError):
        fit_poisson(y, X, start=[0.0])


def test_warm_start_same_optimum(rng):
    X, y = poisson_design(rng, 500, 3)
    cold = fit_poisson(y, X)
    warm = fit_poisson(y, X, start=cold.coef + 0.01)
    np.testing.assert_allclose(warm.coef, cold.coef, atol=1e-7)
    assert warm.iterations <= cold.iterations


def test_fit_node_labels(rng):
    X, _ = poisson_design(rng, 200, 3)
    d = CountMatrix(X.astype(int))
    fit = fit_node(d, 0, [2, 1])
    assert fit.response == 0 and fit.covariates == (2, 1)
    ref = fit_poisson(X[:, 0], X[:, [2, 1]])
    assert fit.slope(1) == pytest.approx(ref.slopes[1])
    assert fit.loglik == pytest.approx(ref.loglik)
    with pytest.raises(ValueError):
        fit_node(d, 0, [0, 1])
    with pytest.raises(KeyError):
        wald_z(fit, 0)


@given(st.integers(0, 10_000), st.integers(1, 4))
def test_nested_models_never_lose_likelihood(seed, q):
    rng = np.random.default_rng(seed)
    X, y = poisson_design(rng, 120, q + 1)
    try:
        small = fit_poisson(y, X[:, :q])
        big = fit_poisson(y, X)
    except SingularFitError:
        return
    assert big.loglik >= small.loglik - 1e-8 * len(y)
