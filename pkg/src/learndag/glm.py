"""Poisson node-conditional regression: likelihood, MLE fitting, Wald z."""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .core import CountMatrix, LearnDagError

ETA_MAX = 30.0
MAX_ITER = 100
REL_TOL = 1e-10
GRAD_TOL_PER_SAMPLE = 1e-8


class NumericOverflowError(LearnDagError, ArithmeticError):
    pass


class SingularFitError(LearnDagError, np.linalg.LinAlgError):
    """Information matrix is singular; the coefficients are untestable."""


@dataclass
class GlmFit:
    response: int
    covariates: tuple[int, ...]
    intercept: float
    slopes: np.ndarray
    loglik: float
    std_errors: np.ndarray
    converged: bool
    iterations: int
    grad_max: float = float("nan")
    clamped: bool = False
    history: np.ndarray = field(default=None, repr=False)

    @property
    def coef(self) -> np.ndarray:
        """Intercept followed by slopes, in covariate order."""
        return np.concatenate(([self.intercept], self.slopes))

    def slope(self, k: int) -> float:
        return float(self.slopes[self.covariates.index(k)])


def design_matrix(columns: np.ndarray | None, n: int) -> np.ndarray:
    """Intercept column followed by ``columns`` (n x q) as a C-ordered float array."""
    if columns is None or np.size(columns) == 0:
        return np.ones((n, 1))
    cols = np.asarray(columns, dtype=np.float64)
    if cols.ndim == 1:
        cols = cols[:, None]
    X = np.empty((n, cols.shape[1] + 1))
    X[:, 0] = 1.0
    X[:, 1:] = cols
    return X


def node_loglik(x_j, design, coeffs) -> float:
    """Poisson conditional log-likelihood of one column.

    ``sum_i [eta_i x_ij - log x_ij! - exp(eta_i)]`` with
    ``eta = coeffs[0] + design @ coeffs[1:]``.
    """
    y = np.asarray(x_j, dtype=np.float64)
    coeffs = np.asarray(coeffs, dtype=np.float64)
    n = y.shape[0]
    X = design_matrix(design, n)
    if coeffs.shape != (X.shape[1],):
        raise ValueError(f"expected {X.shape[1]} coefficients, got {coeffs.shape}")
    with np.errstate(over="ignore"):
        eta = X @ coeffs
        mu = np.exp(eta)
    if not (np.all(np.isfinite(eta)) and np.all(np.isfinite(mu))):
        raise NumericOverflowError("linear predictor overflows exp()")
    return float(eta @ y - gammaln(y + 1.0).sum() - mu.sum())


def node_loglik_grad(x_j, design, coeffs) -> np.ndarray:
    """Gradient of :func:`node_loglik` with respect to the coefficients."""
    y = np.asarray(x_j, dtype=np.float64)
    X = design_matrix(design, y.shape[0])
    mu = np.exp(X @ np.asarray(coeffs, dtype=np.float64))
    return X.T @ (y - mu)


def fit_poisson(
    x_j,
    design=None,
    *,
    start=None,
    log_factorial: float | None = None,
    max_iter: int = MAX_ITER,
    response: int = -1,
    covariates: Sequence[int] = (),
) -> GlmFit:
    """Maximum-likelihood Poisson regression of ``x_j`` on ``design``.

    Damped Newton (equivalently IRLS) from ``start`` (default: log mean
    intercept, zero slopes). An all-zero response has no finite MLE; its
    intercept is pinned at ``log(1 / 2n)`` with zero slopes and the fit is
    reported as not converged.

    Raises
    ------
    SingularFitError
        When the information matrix is singular (collinear or constant
        design columns).
    """
    y = np.ascontiguousarray(x_j, dtype=np.float64)
    n = y.shape[0]
    X = design_matrix(design, n)
    q = X.shape[1]
    covariates = tuple(int(k) for k in covariates) or tuple(range(q - 1))
    if len(covariates) != q - 1:
        raise ValueError("covariate labels do not match design width")
    if n <= q:
        raise SingularFitError(f"{n} samples cannot identify {q} coefficients")
    if log_factorial is None:
        log_factorial = float(gammaln(y + 1.0).sum())

    ybar = y.mean()
    if ybar == 0.0:
        beta = np.zeros(q)
        beta[0] = np.log(1.0 / (2.0 * n))
        ll = node_loglik(y, X[:, 1:], beta)
        return GlmFit(response, covariates, float(beta[0]), beta[1:].copy(), ll,
                      np.full(q - 1, np.inf), converged=False, iterations=0,
                      grad_max=float(np.abs(node_loglik_grad(y, X[:, 1:], beta)).max()))

    if start is None:
        beta0 = np.zeros(q)
        beta0[0] = np.log(ybar)
    else:
        beta0 = np.array(start, dtype=np.float64)
        if beta0.shape != (q,):
            raise ValueError(f"start has shape {beta0.shape}, expected ({q},)")

    beta, ll_core, gmax, iters, status, cov, history = _kernels.poisson_newton(
        X, y, beta0, max_iter, GRAD_TOL_PER_SAMPLE * n, REL_TOL, ETA_MAX)
    if status == _kernels.SINGULAR:
        raise SingularFitError("singular Fisher information")
    se = np.sqrt(np.diag(cov))
    return GlmFit(
        response=response,
        covariates=covariates,
        intercept=float(beta[0]),
        slopes=beta[1:].copy(),
        loglik=float(ll_core - log_factorial),
        std_errors=se[1:].copy(),
        converged=status == _kernels.CONVERGED,
        iterations=int(iters),
        grad_max=float(gmax),
        clamped=status == _kernels.CLAMPED,
        history=history[: iters + 1] - log_factorial,
    )


def fit_node(data: CountMatrix, j: int, covariates: Sequence[int], start=None) -> GlmFit:
    """Fit column ``j`` of ``data`` on the listed covariate columns."""
    covariates = tuple(int(k) for k in covariates)
    if j in covariates:
        raise ValueError(f"response {j} among its own covariates")
    vf = data.values_f
    design = vf[:, list(covariates)] if covariates else None
    return fit_poisson(vf[:, j], design, start=start,
                       log_factorial=float(data.log_factorials[j]),
                       response=j, covariates=covariates)


def wald_z(fit: GlmFit, k: int) -> float:
    """``slope / std_error`` for covariate ``k``."""
    if k not in fit.covariates:
        raise KeyError(f"{k} is not a covariate of this fit")
    idx = fit.covariates.index(k)
    se = fit.std_errors[idx]
    if not (np.isfinite(se) and se > 0):
        raise SingularFitError(f"coefficient of {k} is untestable")
    return float(fit.slopes[idx] / se)
