"""Wald-test pruning of an oriented DAG (step 3)."""
from __future__ import annotations

import logging
from typing import NamedTuple

from .core import CountMatrix, Dag
from .glm import SingularFitError, fit_node
from .stattests import wald_result

log = logging.getLogger(__name__)


class EdgeTest(NamedTuple):
    parent: int
    child: int
    z: float
    p_value: float
    kept: bool
    tested: bool


def wald_table(data: CountMatrix, dag: Dag, level: float) -> list[EdgeTest]:
    """One row per edge of ``dag``: Wald test of its slope given all of pa(j).

    Each node is fitted once on its full parent set. Edges into a node
    whose fit fails (or whose slope is untestable) are kept.
    """
    if not (0.0 < level < 1.0):
        raise ValueError("level must lie in (0, 1)")
    rows = []
    for j in range(dag.p):
        pa = dag.parents(j)
        if not pa:
            continue
        try:
            fit = fit_node(data, j, pa)
        except SingularFitError:
            fit = None
            log.warning("fit of node %d on %s failed; its edges are kept", j, pa)
        for k in pa:
            res = None if fit is None else wald_result(fit, k, level)
            if res is None or res.untestable:
                rows.append(EdgeTest(k, j, float("nan"), float("nan"), True, False))
            else:
                rows.append(EdgeTest(k, j, res.statistic, res.p_value, res.reject, True))
    return rows


def prune_wald(data: CountMatrix, dag: Dag, level: float) -> Dag:
    """Drop every edge whose Wald test does not reject at ``level``."""
    rows = wald_table(data, dag, level)
    return Dag(dag.p, [(r.parent, r.child) for r in rows if r.kept])
