"""Synthetic benchmark: graph generators, Poisson DAG sampling, metrics, sweeps."""
from __future__ import annotations

import enum
import logging
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Config, CountMatrix, Dag, topological_order
from .pipeline import learn_dag

log = logging.getLogger(__name__)

ETA_CLAMP = 30.0


class GraphKind(str, enum.Enum):
    SCALEFREE = "scalefree"
    HUB = "hub"
    ERDOS_RENYI = "erdosrenyi"


# edge counts of the benchmark networks, by p and kind
_DEFAULT_EDGES = {
    10: {GraphKind.SCALEFREE: 9, GraphKind.HUB: 8, GraphKind.ERDOS_RENYI: 8},
    100: {GraphKind.SCALEFREE: 99, GraphKind.HUB: 95, GraphKind.ERDOS_RENYI: 109},
}


def default_edges(p: int, kind: GraphKind | str) -> int:
    kind = GraphKind(kind)
    if p in _DEFAULT_EDGES:
        return _DEFAULT_EDGES[p][kind]
    if kind is GraphKind.HUB:
        return p - math.ceil(p / 10)
    return p - 1


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _preferential_tree(p: int, rng) -> set[tuple[int, int]]:
    """Barabasi-Albert growth with one link per new node; edges old -> new."""
    edges = set()
    degree = np.zeros(p)
    for t in range(1, p):
        w = degree[:t] + 1.0  # +1 lets isolated early nodes be chosen
        u = int(rng.choice(t, p=w / w.sum()))
        edges.add((u, t))
        degree[u] += 1
        degree[t] += 1
    return edges


def _scalefree(p: int, m: int, rng) -> set[tuple[int, int]]:
    edges = _preferential_tree(p, rng)
    if m < len(edges):
        keep = rng.choice(len(edges), size=m, replace=False)
        ordered = sorted(edges)
        return {ordered[i] for i in sorted(keep)}
    degree = np.zeros(p)
    for a, b in edges:
        degree[a] += 1
        degree[b] += 1
    while len(edges) < m:
        t = int(rng.integers(1, p))
        free = [u for u in range(t) if (u, t) not in edges]
        if not free:
            continue
        w = degree[free] + 1.0
        u = free[int(rng.choice(len(free), p=w / w.sum()))]
        edges.add((u, t))
        degree[u] += 1
        degree[t] += 1
    return edges


def _hub(p: int, m: int, rng) -> set[tuple[int, int]]:
    # nodes 0..h-1 are hubs, each pointing into its own block of leaves
    h = math.ceil(p / 10)
    leaves = np.arange(h, p)
    blocks = np.array_split(leaves, h)
    edges = [(hub, int(leaf)) for hub, block in enumerate(blocks) for leaf in block]
    if m < len(edges):
        keep = np.sort(rng.choice(len(edges), size=m, replace=False))
        return {edges[i] for i in keep}
    out = set(edges)
    extra = [(a, b) for a in range(h) for b in range(a + 1, h)]
    extra += [(a, b) for a in range(p) for b in range(max(a + 1, h), p) if (a, b) not in out]
    need = m - len(out)
    hub_pairs = h * (h - 1) // 2
    if need <= hub_pairs:
        pick = rng.choice(hub_pairs, size=need, replace=False)
    else:
        rest = rng.choice(len(extra) - hub_pairs, size=need - hub_pairs, replace=False) + hub_pairs
        pick = np.concatenate([np.arange(hub_pairs), rest])
    out.update(extra[int(i)] for i in pick)
    return out


def _erdos_renyi(p: int, m: int, rng) -> set[tuple[int, int]]:
    pairs = [(a, b) for a in range(p) for b in range(a + 1, p)]
    pick = rng.choice(len(pairs), size=m, replace=False)
    return {pairs[int(i)] for i in pick}


def gen_graph(p: int, kind: GraphKind | str = GraphKind.SCALEFREE,
              target_edges: int | None = None, seed=None) -> Dag:
    """Random DAG of the given family with exactly ``target_edges`` edges.

    Edges run from earlier to later nodes of a generation order (attachment
    time for scale-free graphs, hub before leaf for hub graphs); node labels
    are then randomly permuted.
    """
    kind = GraphKind(kind)
    if p < 2:
        raise ValueError("p must be >= 2")
    m = default_edges(p, kind) if target_edges is None else int(target_edges)
    if not (0 <= m <= p * (p - 1) // 2):
        raise ValueError(f"cannot place {m} edges on {p} nodes")
    rng = _rng(seed)
    if kind is GraphKind.SCALEFREE:
        edges = _scalefree(p, m, rng)
    elif kind is GraphKind.HUB:
        edges = _hub(p, m, rng)
    else:
        edges = _erdos_renyi(p, m, rng)
    perm = rng.permutation(p)
    return Dag(p, sorted((int(perm[a]), int(perm[b])) for a, b in edges))


@dataclass
class TrueModel:
    dag: Dag
    intercepts: np.ndarray
    weights: dict[tuple[int, int], float]

    def __post_init__(self):
        if set(self.weights) != set(self.dag.edges):
            raise ValueError("weights must be given for exactly the DAG edges")

    @property
    def weight_matrix(self) -> np.ndarray:
        W = np.zeros((self.dag.p, self.dag.p))
        for (k, j), w in self.weights.items():
            W[k, j] = w
        return W


def _ancestral(model: TrueModel, n: int, rng) -> tuple[np.ndarray, int]:
    p = model.dag.p
    X = np.zeros((n, p), dtype=np.int64)
    W = model.weight_matrix
    clamps = 0
    for j in topological_order(model.dag):
        pa = model.dag.parents(j)
        eta = np.full(n, model.intercepts[j])
        if pa:
            eta = eta + X[:, pa] @ W[pa, j]
        over = eta > ETA_CLAMP
        clamps += int(over.sum())
        X[:, j] = rng.poisson(np.exp(np.minimum(eta, ETA_CLAMP)))
    return X, clamps


def gen_params(dag: Dag, seed=None, intercept_range=(0.5, 1.0), weight_range=(0.2, 0.5),
               pilot: int = 1000, eta_cap: float = 5.0, max_tries: int = 200) -> TrueModel:
    """Intercepts ~ U(intercept_range); weights ~ +/-U(weight_range) with fair signs.

    Positive weights along a chain of count variables compound quickly, so
    the draw is audited on a ``pilot``-sample ancestral run: node by node in
    topological order, the incoming weights are redrawn until the node's
    largest pilot linear predictor stays below ``eta_cap`` (well inside the
    sampler clamp). A node that keeps failing gets all-negative weights,
    which bounds its predictor by its intercept.
    """
    rng = _rng(seed)
    p = dag.p
    theta = rng.uniform(*intercept_range, size=p)
    weights: dict[tuple[int, int], float] = {}
    Xp = np.zeros((pilot, p))
    for j in topological_order(dag):
        pa = dag.parents(j)
        w = np.zeros(0)
        eta = np.full(pilot, theta[j])
        for attempt in range(max_tries + 1):
            mags = rng.uniform(*weight_range, size=len(pa))
            if attempt < max_tries:
                signs = np.where(rng.random(len(pa)) < 0.5, -1.0, 1.0)
            else:
                signs = -np.ones(len(pa))
            w = signs * mags
            eta = theta[j] + (Xp[:, pa] @ w if pa else np.zeros(pilot))
            if np.max(eta) <= eta_cap:
                break
        weights.update({(k, j): float(v) for k, v in zip(pa, w)})
        Xp[:, j] = rng.poisson(np.exp(np.minimum(eta, ETA_CLAMP)))
    return TrueModel(dag, theta, weights)


def sample(model: TrueModel, n: int, seed=None) -> CountMatrix:
    """``n`` ancestral draws ``X_j ~ Poisson(exp(theta_j + sum_k theta_jk x_k))``."""
    X, clamps = _ancestral(model, n, _rng(seed))
    if clamps:
        log.warning("%d linear predictors clamped at %.0f while sampling", clamps, ETA_CLAMP)
    return CountMatrix(X)


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "precision": self.precision,
                "recall": self.recall, "f1": self.f1}


def structure_metrics(est: Dag, truth: Dag) -> Metrics:
    """Directed-edge comparison; a reversed edge is one FP plus one FN."""
    if est.p != truth.p:
        raise ValueError(f"node counts differ: {est.p} vs {truth.p}")
    e, t = est.edges, truth.edges
    return Metrics(len(e & t), len(e - t), len(t - e))


@dataclass(frozen=True)
class SweepCell:
    kind: GraphKind
    p: int
    n: int
    variant: str = "learnDAG"
    config: Config = field(default_factory=Config)
    target_edges: int | None = None


ROW_FIELDS = ("kind", "p", "n", "variant", "replicate", "tp", "fp", "fn",
              "precision", "recall", "f1", "seconds", "error")
SUMMARY_STATS = ("tp", "fp", "fn", "precision", "recall", "f1")

_KIND_CODE = {GraphKind.SCALEFREE: 0, GraphKind.HUB: 1, GraphKind.ERDOS_RENYI: 2}


def replicate_streams(seed: int, kind: GraphKind, p: int, n: int, rep: int):
    """Graph, parameter, data and algorithm seeds of one replicate.

    Variants of the same (kind, p, n) share them, so variant comparisons
    are paired on identical data.
    """
    ss = np.random.SeedSequence([int(seed), _KIND_CODE[GraphKind(kind)], int(p), int(n), int(rep)])
    g, th, d, a = ss.spawn(4)
    return g, th, d, int(a.generate_state(1)[0])


def run_replicate(cell: SweepCell, rep: int, seed: int) -> dict:
    g, th, d, algo_seed = replicate_streams(seed, cell.kind, cell.p, cell.n, rep)
    row = {"kind": GraphKind(cell.kind).value, "p": cell.p, "n": cell.n,
           "variant": cell.variant, "replicate": rep}
    t0 = time.perf_counter()
    try:
        truth = gen_graph(cell.p, cell.kind, cell.target_edges, seed=np.random.default_rng(g))
        model = gen_params(truth, seed=np.random.default_rng(th))
        data = sample(model, cell.n, seed=np.random.default_rng(d))
        res = learn_dag(data, replace(cell.config, seed=algo_seed))
        row.update(structure_metrics(res.dag, truth).as_dict())
        row["error"] = ""
    except Exception as exc:  # a failing replicate must not abort the sweep
        log.exception("replicate %s/%d failed", cell, rep)
        row.update({k: float("nan") for k in SUMMARY_STATS})
        row["error"] = f"{type(exc).__name__}: {exc}"
    row["seconds"] = time.perf_counter() - t0
    return row


@dataclass
class SweepResult:
    rows: list[dict]
    summary: list[dict]


def summarize(rows: Sequence[dict]) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["kind"], r["p"], r["n"], r["variant"]), []).append(r)
    out = []
    for (kind, p, n, variant), rs in groups.items():
        ok = [r for r in rs if not r["error"]]
        s = {"kind": kind, "p": p, "n": n, "variant": variant,
             "replicates": len(rs), "failures": len(rs) - len(ok)}
        for k in SUMMARY_STATS:
            v = np.array([r[k] for r in ok], dtype=float)
            s[f"{k}_mean"] = float(v.mean()) if v.size else float("nan")
            s[f"{k}_sd"] = float(v.std(ddof=1)) if v.size > 1 else float("nan")
        s["seconds_mean"] = float(np.mean([r["seconds"] for r in rs]))
        out.append(s)
    return out


def run_sweep(cells: Sequence[SweepCell], replicates: int, seed: int = 0,
              progress=None) -> SweepResult:
    """Replicate loop over every cell: fresh graph, parameters and data each time."""
    if not cells:
        raise ValueError("empty grid")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    rows = []
    for cell in cells:
        for rep in range(replicates):
            rows.append(run_replicate(cell, rep, seed))
            if progress is not None:
                progress(rows[-1])
    return SweepResult(rows, summarize(rows))
