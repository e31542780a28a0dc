"""Compare the numba and pure-numpy Newton kernels on representative fits.

Run ``python3 benchmarks/bench_kernels.py``. Each case times one Poisson
regression of size (n, q) with both backends and checks they agree.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from learndag import _kernels
from learndag.glm import ETA_MAX, GRAD_TOL_PER_SAMPLE, MAX_ITER, REL_TOL


def make_case(n: int, q: int, seed: int):
    rng = np.random.default_rng(seed)
    X = np.ones((n, q))
    X[:, 1:] = rng.poisson(2.0, size=(n, q - 1))
    beta = np.concatenate(([0.5], rng.uniform(-0.1, 0.1, size=q - 1)))
    y = rng.poisson(np.exp(np.minimum(X @ beta, 5.0))).astype(float)
    beta0 = np.zeros(q)
    beta0[0] = np.log(max(y.mean(), 1e-3))
    return X, y, beta0


def run(kernel, case) -> tuple:
    X, y, beta0 = case
    return kernel(X, y, beta0, MAX_ITER, GRAD_TOL_PER_SAMPLE * len(y), REL_TOL, ETA_MAX)


def best_time(kernel, case, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        run(kernel, case)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _kernels.poisson_newton_numba is None:
        raise SystemExit("numba backend disabled by environment; unset LEARNDAG_DISABLE_NUMBA")

    cases = [(200, 2), (200, 10), (2000, 2), (2000, 10), (2000, 30), (5000, 100)]
    print(f"{'n':>6} {'q':>4} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8} {'max|dbeta|':>11}")
    for n, q in cases:
        case = make_case(n, q, args.seed)
        run(_kernels.poisson_newton_numba, case)  # compile outside the timing
        b_np = run(_kernels.poisson_newton_numpy, case)[0]
        b_nb = run(_kernels.poisson_newton_numba, case)[0]
        t_np = best_time(_kernels.poisson_newton_numpy, case, args.repeat)
        t_nb = best_time(_kernels.poisson_newton_numba, case, args.repeat)
        diff = float(np.max(np.abs(b_np - b_nb)))
        print(f"{n:>6} {q:>4} {1e3 * t_np:>10.3f} {1e3 * t_nb:>10.3f} {t_np / t_nb:>8.2f} {diff:>11.2e}")


if __name__ == "__main__":
    main()
