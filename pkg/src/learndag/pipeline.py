"""End-to-end learnDAG: (marginal screen), neighbourhood selection, orientation, pruning."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import Config, ConfigError, CountMatrix, Dag, NeighborSets, PruneMode
from .orient import make_orienter
from .pns import pns_bootstrap
from .prune import EdgeTest, wald_table
from .stattests import marginal_test


@dataclass
class LearnResult:
    dag: Dag
    pns_sets: NeighborSets
    oriented: Dag
    trace: list[tuple[int, int, float]]
    config: Config
    prune_table: list[EdgeTest] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)


def marginal_skeleton(data: CountMatrix, level: float, symmetrize: str = "or") -> NeighborSets:
    """Pairs whose marginal-independence test rejects (either regression direction)."""
    p = data.p
    rej = np.zeros((p, p), dtype=bool)
    for j in range(p):
        for k in range(p):
            if j != k:
                rej[j, k] = marginal_test(data, j, k, level).reject
    adj = rej | rej.T if symmetrize == "or" else rej & rej.T
    return NeighborSets.from_adjacency(adj)


def learn_dag(data: CountMatrix, config: Config | None = None) -> LearnResult:
    config = config or Config()
    if not isinstance(data, CountMatrix):
        data = CountMatrix(data)
    if data.n < 2:
        raise ConfigError("need at least two samples")
    cfg = config.resolve(data.n, data.p)
    timings = {}

    t0 = time.perf_counter()
    margin = None
    if cfg.use_margin_step:
        margin = marginal_skeleton(data, cfg.alpha_margin, cfg.symmetrize)
    timings["margin"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if cfg.use_pns:
        sets = pns_bootstrap(data, cfg.alpha_pns, cfg.bootstrap_b, cfg.bootstrap_threshold,
                             seed=cfg.seed, symmetrize=cfg.symmetrize, n_jobs=cfg.n_jobs)
    else:
        sets = NeighborSets.complete(data.p)
    if margin is not None:
        sets = sets.intersect(margin)
    timings["pns"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    orienter = make_orienter(data, sets, cfg)
    oriented = orienter.run()
    timings["orient"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    table = []
    if cfg.prune_mode is PruneMode.WALD:
        table = wald_table(data, oriented, cfg.alpha_prune)
        dag = Dag(data.p, [(r.parent, r.child) for r in table if r.kept])
    else:
        dag = oriented.copy()
    timings["prune"] = time.perf_counter() - t0
    timings["total"] = sum(timings.values())

    return LearnResult(dag=dag, pns_sets=sets, oriented=oriented,
                       trace=orienter.admissions, config=cfg,
                       prune_table=table, timings=timings)
