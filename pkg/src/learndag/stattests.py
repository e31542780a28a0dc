"""Distribution functions, the significance schedule and the three tests."""
from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
from scipy import special

from .core import CountMatrix
from .glm import GlmFit, SingularFitError, fit_node, wald_z


def normal_cdf(z):
    return special.ndtr(z)


def chisq_sf(x, df: int = 1):
    if df < 1:
        raise ValueError("df must be >= 1")
    return special.chdtrc(df, np.maximum(x, 0.0))


def alpha_schedule(n: int, exponent: float) -> float:
    """Significance level ``2 * (1 - Phi(n ** exponent))``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if exponent <= 0:
        raise ValueError("exponent must be positive")
    # upper tail via ndtr(-z) keeps precision for large n
    return float(2.0 * special.ndtr(-(float(n) ** exponent)))


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    reject: bool
    untestable: bool = False

    __test__ = False  # not a pytest class


def _untestable() -> TestResult:
    return TestResult(0.0, 1.0, False, untestable=True)


def wald_result(fit: GlmFit, k: int, level: float) -> TestResult:
    """Two-sided Wald test of the ``k`` slope in ``fit``."""
    if not fit.converged:
        return _untestable()
    try:
        z = wald_z(fit, k)
    except SingularFitError:
        return _untestable()
    pv = float(2.0 * special.ndtr(-abs(z)))
    return TestResult(z, pv, pv < level)


def ci_test(data: CountMatrix, j: int, k: int, cond: Iterable[int], level: float) -> TestResult:
    """Wald test of ``X_j indep X_k | X_cond`` in the Poisson regression of j."""
    cond = list(cond)
    if j == k:
        raise ValueError("j and k must differ")
    if k in cond or j in cond:
        raise ValueError("conditioning set must exclude j and k")
    if len(set(cond)) != len(cond):
        raise ValueError("conditioning set has duplicates")
    covs = sorted([k, *cond])
    try:
        fit = fit_node(data, j, covs)
    except SingularFitError:
        return _untestable()
    return wald_result(fit, k, level)


def marginal_test(data: CountMatrix, j: int, k: int, level: float) -> TestResult:
    return ci_test(data, j, k, (), level)


def deviance_test(gain: float, level: float, tol: float = 1e-8) -> TestResult:
    """Chi-squared(1) test on twice a log-likelihood gain."""
    if gain < -tol:
        raise ValueError(f"negative log-likelihood gain {gain}")
    stat = 2.0 * max(gain, 0.0)
    pv = float(chisq_sf(stat, 1))
    return TestResult(stat, pv, pv < level)
