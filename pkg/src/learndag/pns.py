"""Preliminary neighbourhood selection (step 1).

Each node is regressed on all the others; ``k`` becomes a candidate
neighbour of ``j`` when the Wald test of its slope rejects. The per-node
decisions are symmetrised and the whole procedure is stabilised over
bootstrap resamples.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import CountMatrix, NeighborSets, bootstrap_cutoff
from .glm import SingularFitError, fit_node
from .stattests import ci_test, wald_result

log = logging.getLogger(__name__)


@dataclass
class EdgeFrequency:
    counts: np.ndarray  # symmetric p x p, zero diagonal
    b: int

    def select(self, threshold: float) -> NeighborSets:
        return NeighborSets.from_adjacency(self.counts >= bootstrap_cutoff(threshold, self.b))


def _association_rank(data: CountMatrix, j: int) -> np.ndarray:
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.corrcoef(data.values_f, rowvar=False)[j]
    r = np.nan_to_num(np.abs(r), nan=0.0)
    r[j] = -1.0
    return np.argsort(-r, kind="stable")


def node_rejections(data: CountMatrix, j: int, level: float,
                    start=None) -> tuple[np.ndarray, int]:
    """Boolean row: does the test of ``k`` in the regression of ``j`` reject.

    Conditioning is on all remaining nodes. When that saturates the
    sample (``p - 2 >= n``) each pair instead conditions on the
    ``min(p - 2, n // 5)`` nodes most correlated with ``X_j``.
    Also returns how many pairs were untestable. ``start`` seeds the
    full-conditioning fit (bootstrap replicates reuse the full-data MLE).
    """
    n, p = data.n, data.p
    rej = np.zeros(p, dtype=bool)
    others = [k for k in range(p) if k != j]
    if p - 2 < n:
        try:
            fit = fit_node(data, j, others, start=start)
        except SingularFitError:
            return rej, len(others)
        bad = 0
        for k in others:
            res = wald_result(fit, k, level)
            rej[k] = res.reject
            bad += res.untestable
        return rej, bad
    r = min(p - 2, n // 5)
    ranked = _association_rank(data, j)
    bad = 0
    for k in others:
        cond = [m for m in ranked if m != j and m != k][:r]
        res = ci_test(data, j, k, cond, level)
        rej[k] = res.reject
        bad += res.untestable
    return rej, bad


def full_fit_starts(data: CountMatrix) -> list:
    """Coefficients of each node regressed on all others (None where unusable)."""
    if data.p - 2 >= data.n:
        return [None] * data.p
    starts = []
    for j in range(data.p):
        try:
            fit = fit_node(data, j, [k for k in range(data.p) if k != j])
        except SingularFitError:
            starts.append(None)
            continue
        usable = fit.converged and np.all(np.isfinite(fit.coef))
        starts.append(fit.coef if usable else None)
    return starts


def undirected_adjacency(data: CountMatrix, level: float, symmetrize: str = "or",
                         starts=None) -> np.ndarray:
    p = data.p
    rej = np.zeros((p, p), dtype=bool)
    untestable = 0
    for j in range(p):
        rej[j], bad = node_rejections(data, j, level, None if starts is None else starts[j])
        untestable += bad
    if untestable:
        log.debug("%d untestable pairs treated as absent edges", untestable)
    if symmetrize == "or":
        return rej | rej.T
    if symmetrize == "and":
        return rej & rej.T
    raise ValueError(f"unknown symmetrization rule {symmetrize!r}")


def estimate_undirected(data: CountMatrix, level: float, symmetrize: str = "or") -> NeighborSets:
    return NeighborSets.from_adjacency(undirected_adjacency(data, level, symmetrize))


def bootstrap_edge_frequency(data: CountMatrix, level: float, b: int = 50, seed=0,
                             symmetrize: str = "or", n_jobs: int = 1) -> EdgeFrequency:
    """Count, over ``b`` row resamples, how often each edge is selected."""
    if b < 1:
        raise ValueError("b must be >= 1")
    n = data.n
    streams = np.random.SeedSequence(seed).spawn(b)
    starts = full_fit_starts(data)

    def one(ss):
        rows = np.random.default_rng(ss).integers(0, n, size=n)
        return undirected_adjacency(data.take_rows(rows), level, symmetrize, starts)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            mats = list(pool.map(one, streams))
    else:
        mats = [one(ss) for ss in streams]
    counts = np.sum(mats, axis=0, dtype=np.int64)
    return EdgeFrequency(counts, b)


def pns_bootstrap(data: CountMatrix, level: float, b: int = 50, threshold: float = 0.2,
                  seed=0, symmetrize: str = "or", n_jobs: int = 1) -> NeighborSets:
    """Candidate parent sets: edges selected in at least ``ceil(threshold * b)`` resamples."""
    if not (0.0 < threshold <= 1.0):
        raise ValueError("threshold must lie in (0, 1]")
    freq = bootstrap_edge_frequency(data, level, b, seed, symmetrize, n_jobs)
    return freq.select(threshold)
