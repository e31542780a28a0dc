"""Greedy score-matrix orientation (step 2).

Starting from the empty graph, the best admissible ``k -> j`` by
log-likelihood (or BIC) gain is added one at a time. Entries that would
close a cycle are blocked, a node whose parent set reached the cap has
its whole column blocked, and after each addition only column ``j`` is
rescored because the likelihood decomposes over nodes.
"""
from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import Config, CountMatrix, Dag, NeighborSets, PruneMode, ScoreKind
from .glm import GlmFit, SingularFitError, fit_node
from .stattests import deviance_test


class _Blocked:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "BLOCKED"

    def __bool__(self):
        return False


BLOCKED = _Blocked()


class Gain(NamedTuple):
    score: float  # what the greedy search maximises
    loglik: float  # raw log-likelihood difference, feeds the deviance test


def _gain_from_fits(base: GlmFit, cand: GlmFit, kind: ScoreKind, n: int) -> Gain:
    d = cand.loglik - base.loglik
    # nested MLEs: any negative difference is convergence noise
    d = max(d, 0.0)
    score = d - 0.5 * math.log(n) if kind is ScoreKind.BIC else d
    return Gain(score, d)


def _usable(fit: GlmFit) -> bool:
    return not fit.clamped and math.isfinite(fit.loglik)


def score_gain(data: CountMatrix, j: int, k: int, pa_j: Sequence[int],
               kind: ScoreKind | str = ScoreKind.LOGLIK):
    """Gain of adding ``k -> j`` to parent set ``pa_j``; ``BLOCKED`` if a fit fails."""
    kind = ScoreKind(kind)
    pa = sorted(pa_j)
    if k == j or k in pa or j in pa:
        raise ValueError("k must be a new parent distinct from j")
    try:
        base = fit_node(data, j, pa)
        cand = fit_node(data, j, sorted([*pa, k]))
    except SingularFitError:
        return BLOCKED
    if not (_usable(base) and _usable(cand)):
        return BLOCKED
    return _gain_from_fits(base, cand, kind, data.n).score


class NodeScorer:
    """Scores a column of the score matrix from data, caching fits.

    The fit of ``j`` on ``pa(j) + {k}`` computed while scoring becomes the
    base fit once ``k -> j`` is admitted, and candidate fits start from
    the base coefficients.
    """

    def __init__(self, data: CountMatrix, kind: ScoreKind | str = ScoreKind.LOGLIK):
        self.data = data
        self.kind = ScoreKind(kind)
        self._cache: list[dict[tuple[int, ...], GlmFit | None]] = [{} for _ in range(data.p)]
        self.n_fits = 0

    def _fit(self, j, covs, start=None):
        self.n_fits += 1
        try:
            return fit_node(self.data, j, covs, start=start)
        except SingularFitError:
            return None

    def column(self, j: int, parents: Sequence[int], candidates: Sequence[int]) -> dict:
        pa = tuple(sorted(parents))
        cache = self._cache[j]
        base = cache[pa] if pa in cache else self._fit(j, pa)
        fresh = {pa: base}
        out = {}
        for k in candidates:
            covs = tuple(sorted((*pa, k)))
            if base is None or not _usable(base):
                out[k] = BLOCKED
                continue
            pos = covs.index(k) + 1
            start = np.insert(base.coef, pos, 0.0)
            cand = self._fit(j, covs, start=start)
            fresh[covs] = cand
            if cand is None or not _usable(cand):
                out[k] = BLOCKED
            else:
                out[k] = _gain_from_fits(base, cand, self.kind, self.data.n)
        self._cache[j] = fresh
        return out

    def base_loglik(self, j: int, parents: Sequence[int]) -> float:
        pa = tuple(sorted(parents))
        fit = self._cache[j].get(pa) or self._fit(j, pa)
        return fit.loglik


class MatrixScorer:
    """Fixed gains ``table[k, j]`` that ignore the current parents (NaN = blocked)."""

    def __init__(self, table):
        self.table = np.asarray(table, dtype=float)

    def column(self, j, parents, candidates):
        out = {}
        for k in candidates:
            v = self.table[k, j]
            out[k] = BLOCKED if np.isnan(v) else Gain(float(v), max(float(v), 0.0))
        return out


class ScoreMatrix:
    """``gains[k, j]`` with a separate ``blocked`` mask standing for -Inf."""

    def __init__(self, p: int):
        self.gains = np.zeros((p, p))
        self.loglik_gains = np.zeros((p, p))
        self.blocked = np.ones((p, p), dtype=bool)

    def get(self, k: int, j: int):
        return BLOCKED if self.blocked[k, j] else float(self.gains[k, j])

    def any_open(self) -> bool:
        return not self.blocked.all()

    def argmax(self) -> tuple[int, int]:
        """Open entry with the largest gain; ties go to smallest (j, then k)."""
        masked = np.where(self.blocked, -np.inf, self.gains)
        best = masked.max()
        ks, js = np.nonzero(~self.blocked & (self.gains == best))
        idx = np.lexsort((ks, js))[0]
        return int(ks[idx]), int(js[idx])

    def copy(self) -> "ScoreMatrix":
        new = ScoreMatrix.__new__(ScoreMatrix)
        new.gains = self.gains.copy()
        new.loglik_gains = self.loglik_gains.copy()
        new.blocked = self.blocked.copy()
        return new


class Step(NamedTuple):
    parent: int
    child: int
    gain: float
    admitted: bool


@dataclass
class GreedyOrienter:
    """Stepwise state of the orientation loop.

    ``admit`` optionally vetoes an addition given its raw log-likelihood
    gain; a vetoed entry is blocked and the loop continues. ``min_gain``
    stops the loop once the best open gain falls below it.
    """

    neighbors: NeighborSets
    scorer: object
    max_parents: int
    admit: Callable[[float], bool] | None = None
    min_gain: float | None = None
    dag: Dag = field(init=False)
    scores: ScoreMatrix = field(init=False)
    reach: np.ndarray = field(init=False)
    vetoed: np.ndarray = field(init=False)
    trace: list[Step] = field(init=False, default_factory=list)

    def __post_init__(self):
        p = self.neighbors.p
        self.dag = Dag(p)
        self.scores = ScoreMatrix(p)
        self.reach = np.zeros((p, p), dtype=bool)  # reach[a, b]: path a ~> b
        self.vetoed = np.zeros((p, p), dtype=bool)
        for j in range(p):
            self._update_column(j)

    @property
    def p(self) -> int:
        return self.neighbors.p

    def _update_column(self, j: int) -> None:
        sm = self.scores
        sm.blocked[:, j] = True
        pa = self.dag.parents(j)
        if len(pa) >= self.max_parents:
            return
        cands = [k for k in self.neighbors[j]
                 if not self.dag.has_edge(k, j) and not self.reach[j, k]
                 and not self.vetoed[k, j]]
        if not cands:
            return
        for k, g in self.scorer.column(j, pa, cands).items():
            if g is BLOCKED:
                continue
            sm.gains[k, j] = g.score
            sm.loglik_gains[k, j] = g.loglik
            sm.blocked[k, j] = False

    def step(self) -> Step | None:
        """Advance by one admission or veto; None once every entry is blocked."""
        sm = self.scores
        if not sm.any_open():
            return None
        i, j = sm.argmax()
        gain = float(sm.gains[i, j])
        if self.min_gain is not None and gain < self.min_gain:
            sm.blocked[:] = True
            return None
        if self.admit is not None and not self.admit(float(sm.loglik_gains[i, j])):
            sm.blocked[i, j] = True
            self.vetoed[i, j] = True
            st = Step(i, j, gain, False)
            self.trace.append(st)
            return st
        self.dag.add_edge(i, j)
        src = self.reach[:, i].copy()
        src[i] = True
        dst = self.reach[j, :].copy()
        dst[j] = True
        self.reach |= np.outer(src, dst)
        # block every entry whose addition would now close a directed cycle
        sm.blocked |= self.reach.T
        sm.blocked[i, j] = True
        self._update_column(j)
        st = Step(i, j, gain, True)
        self.trace.append(st)
        return st

    def run(self) -> Dag:
        while self.step() is not None:
            pass
        return self.dag

    @property
    def admissions(self) -> list[tuple[int, int, float]]:
        return [(s.parent, s.child, s.gain) for s in self.trace if s.admitted]


def make_orienter(data: CountMatrix, neighbors: NeighborSets, config: Config) -> GreedyOrienter:
    if neighbors.p != data.p:
        raise ValueError(f"neighbour sets cover {neighbors.p} nodes, data has {data.p}")
    cfg = config.resolve(data.n, data.p)
    admit = None
    if cfg.prune_mode is PruneMode.DEVIANCE:
        level = cfg.alpha_prune
        tol = 1e-8 * data.n
        admit = lambda g: deviance_test(g, level, tol=tol).reject  # noqa: E731
    return GreedyOrienter(neighbors, NodeScorer(data, cfg.score_kind), cfg.max_parents,
                          admit=admit, min_gain=cfg.min_gain)


def orient_edges(data: CountMatrix, neighbors: NeighborSets, config: Config | None = None) -> Dag:
    return make_orienter(data, neighbors, config or Config()).run()


def potential_parents(dag: Dag) -> list[list[int]]:
    return [dag.parents(j) for j in range(dag.p)]
