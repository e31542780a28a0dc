"""Hot numeric kernels: damped Newton for the Poisson log-linear model.

Two implementations share one signature. The numba path compiles
explicit loops (every learnDAG run performs thousands of small fits and
per-call interpreter overhead dominates there); the numpy path is plain
vectorised code. Set ``LEARNDAG_DISABLE_NUMBA=1`` (or numba's own
``NUMBA_DISABLE_JIT=1``) before import to force the numpy path.

Kernel contract
---------------
``poisson_newton(X, y, beta0, max_iter, grad_tol, rel_tol, eta_max)``
returns ``(beta, ll_core, grad_max, n_iter, status, cov, history)`` where
``ll_core = sum_i (eta_i y_i - exp(eta_i))`` (the log-factorial constant
is added by the caller), ``cov`` is the inverse Fisher information at
``beta`` and ``history[:n_iter + 1]`` traces ``ll_core`` per iteration.
"""
from __future__ import annotations

import math
import os

import numpy as np

CONVERGED = 0
MAX_ITER = 1
SINGULAR = 2
CLAMPED = 3

_MAX_HALVINGS = 60
_RESOLUTION = 1e-11


def _env_flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() not in ("", "0", "false", "no")


USE_NUMBA = not (_env_flag("LEARNDAG_DISABLE_NUMBA") or _env_flag("NUMBA_DISABLE_JIT"))
if USE_NUMBA:
    try:
        import numba
    except ImportError:  # pragma: no cover
        USE_NUMBA = False


# --------------------------------------------------------------------------
# numpy path
# --------------------------------------------------------------------------

def _ll_np(X, y, beta, eta_max):
    eta = np.minimum(X @ beta, eta_max)
    mu = np.exp(eta)
    return float(eta @ y - mu.sum()), mu


def _cholesky_np(H):
    L = np.linalg.cholesky(H)
    if np.min(np.diag(L)) ** 2 <= 1e-13 * np.max(np.diag(H)):
        raise np.linalg.LinAlgError("information matrix numerically singular")
    return L


def poisson_newton_numpy(X, y, beta0, max_iter, grad_tol, rel_tol, eta_max):
    n, q = X.shape
    beta = np.array(beta0, dtype=np.float64)
    history = np.full(max_iter + 1, np.nan)
    ll, mu = _ll_np(X, y, beta, eta_max)
    history[0] = ll
    status = MAX_ITER
    it = 0
    cov = np.full((q, q), np.nan)
    grad = X.T @ (y - mu)
    while it < max_iter:
        gmax = np.abs(grad).max()
        if gmax <= grad_tol:
            status = CONVERGED
            break
        H = X.T @ (mu[:, None] * X)
        try:
            L = _cholesky_np(H)
        except np.linalg.LinAlgError:
            status = SINGULAR
            break
        step = np.linalg.solve(L.T, np.linalg.solve(L, grad))
        # inside the quadratic region the predicted gain is below what the
        # summed log-likelihood can resolve; take the full Newton step
        quadratic = grad @ step < _RESOLUTION * max(abs(ll), 1.0)
        t = 1.0
        accepted = False
        for _ in range(_MAX_HALVINGS):
            cand = beta + t * step
            ll_new, mu_new = _ll_np(X, y, cand, eta_max)
            if ll_new >= ll or quadratic:
                accepted = True
                break
            t *= 0.5
        it += 1
        if not accepted:
            # no ascent left at machine precision
            history[it] = ll
            status = CONVERGED if gmax <= 1e4 * grad_tol else MAX_ITER
            break
        change = abs(ll_new - ll) / max(abs(ll), 1.0)
        beta, ll, mu = cand, ll_new, mu_new
        history[it] = ll
        grad = X.T @ (y - mu)
        if change < rel_tol and np.abs(grad).max() <= grad_tol:
            status = CONVERGED
            break
    gmax = float(np.abs(grad).max())
    if status != SINGULAR:
        H = X.T @ (mu[:, None] * X)
        try:
            L = _cholesky_np(H)
            Linv = np.linalg.solve(L, np.eye(q))
            cov = Linv.T @ Linv
        except np.linalg.LinAlgError:
            status = SINGULAR
        if status != SINGULAR and np.any(X @ beta > eta_max):
            status = CLAMPED
    return beta, ll, gmax, it, status, cov, history


# --------------------------------------------------------------------------
# numba path
# --------------------------------------------------------------------------

def _ll_loop(X, y, beta, eta_max, mu):
    n, q = X.shape
    ll = 0.0
    for i in range(n):
        eta = 0.0
        for a in range(q):
            eta += X[i, a] * beta[a]
        if eta > eta_max:
            eta = eta_max
        m = math.exp(eta)
        mu[i] = m
        ll += eta * y[i] - m
    return ll


def _grad_loop(X, y, mu, grad):
    n, q = X.shape
    for a in range(q):
        grad[a] = 0.0
    for i in range(n):
        r = y[i] - mu[i]
        for a in range(q):
            grad[a] += X[i, a] * r
    gmax = 0.0
    for a in range(q):
        if abs(grad[a]) > gmax:
            gmax = abs(grad[a])
    return gmax


def _info_loop(X, mu, Xw, H):
    # sqrt(mu)-scaled rows, then one BLAS product: X^T diag(mu) X
    n, q = X.shape
    for i in range(n):
        s = math.sqrt(mu[i])
        for a in range(q):
            Xw[i, a] = X[i, a] * s
    H[:, :] = np.dot(Xw.T, Xw)


def _cholesky_loop(H, L):
    """Lower Cholesky factor in place; False if not numerically PD."""
    q = H.shape[0]
    for a in range(q):
        for b in range(q):
            L[a, b] = 0.0
    scale = 0.0
    for a in range(q):
        if H[a, a] > scale:
            scale = H[a, a]
    tiny = 1e-13 * scale if scale > 0 else 1e-300
    for a in range(q):
        s = H[a, a]
        for c in range(a):
            s -= L[a, c] * L[a, c]
        if not (s > tiny):
            return False
        d = math.sqrt(s)
        L[a, a] = d
        for b in range(a + 1, q):
            s2 = H[b, a]
            for c in range(a):
                s2 -= L[b, c] * L[a, c]
            L[b, a] = s2 / d
    return True


def _chol_solve_loop(L, rhs, out):
    q = L.shape[0]
    for a in range(q):
        s = rhs[a]
        for c in range(a):
            s -= L[a, c] * out[c]
        out[a] = s / L[a, a]
    for a in range(q - 1, -1, -1):
        s = out[a]
        for c in range(a + 1, q):
            s -= L[c, a] * out[c]
        out[a] = s / L[a, a]


def poisson_newton_loops(X, y, beta0, max_iter, grad_tol, rel_tol, eta_max):
    n, q = X.shape
    beta = beta0.copy()
    cand = np.empty(q)
    step = np.empty(q)
    grad = np.empty(q)
    mu = np.empty(n)
    mu_new = np.empty(n)
    H = np.empty((q, q))
    L = np.empty((q, q))
    Xw = np.empty((n, q))
    cov = np.full((q, q), np.nan)
    history = np.full(max_iter + 1, np.nan)

    ll = _ll_loop(X, y, beta, eta_max, mu)
    history[0] = ll
    gmax = _grad_loop(X, y, mu, grad)
    status = MAX_ITER
    it = 0
    while it < max_iter:
        if gmax <= grad_tol:
            status = CONVERGED
            break
        _info_loop(X, mu, Xw, H)
        if not _cholesky_loop(H, L):
            status = SINGULAR
            break
        _chol_solve_loop(L, grad, step)
        pred = 0.0
        for a in range(q):
            pred += grad[a] * step[a]
        quadratic = pred < _RESOLUTION * max(abs(ll), 1.0)
        t = 1.0
        accepted = False
        ll_new = ll
        for _h in range(_MAX_HALVINGS):
            for a in range(q):
                cand[a] = beta[a] + t * step[a]
            ll_new = _ll_loop(X, y, cand, eta_max, mu_new)
            if ll_new >= ll or quadratic:
                accepted = True
                break
            t *= 0.5
        it += 1
        if not accepted:
            history[it] = ll
            status = CONVERGED if gmax <= 1e4 * grad_tol else MAX_ITER
            break
        change = abs(ll_new - ll) / max(abs(ll), 1.0)
        for a in range(q):
            beta[a] = cand[a]
        for i in range(n):
            mu[i] = mu_new[i]
        ll = ll_new
        history[it] = ll
        gmax = _grad_loop(X, y, mu, grad)
        if change < rel_tol and gmax <= grad_tol:
            status = CONVERGED
            break

    if status != SINGULAR:
        _info_loop(X, mu, Xw, H)
        if _cholesky_loop(H, L):
            e = np.zeros(q)
            col = np.empty(q)
            for b in range(q):
                e[:] = 0.0
                e[b] = 1.0
                _chol_solve_loop(L, e, col)
                for a in range(q):
                    cov[a, b] = col[a]
            clamped = False
            for i in range(n):
                eta = 0.0
                for a in range(q):
                    eta += X[i, a] * beta[a]
                if eta > eta_max:
                    clamped = True
                    break
            if clamped:
                status = CLAMPED
        else:
            status = SINGULAR
    return beta, ll, gmax, it, status, cov, history


if USE_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)
    _ll_loop = _jit(_ll_loop)
    _grad_loop = _jit(_grad_loop)
    _info_loop = _jit(_info_loop)
    _cholesky_loop = _jit(_cholesky_loop)
    _chol_solve_loop = _jit(_chol_solve_loop)
    poisson_newton_numba = _jit(poisson_newton_loops)
    poisson_newton = poisson_newton_numba
else:
    poisson_newton_numba = None
    poisson_newton = poisson_newton_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"
