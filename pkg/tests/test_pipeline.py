import numpy as np
import pytest

from learndag.core import Config, ConfigError, CountMatrix, NeighborSets
from learndag.pipeline import learn_dag, marginal_skeleton
from learndag.simulate import gen_graph, gen_params, sample, structure_metrics
from learndag.stattests import marginal_test


@pytest.fixture(scope="module")
def problem():
    truth = gen_graph(8, "scalefree", seed=1)
    data = sample(gen_params(truth, seed=2), 1000, seed=3)
    return truth, data


def test_default_run(problem):
    truth, data = problem
    res = learn_dag(data, Config(bootstrap_b=10))
    assert res.dag.edges <= res.oriented.edges
    for j in range(data.p):
        assert set(res.oriented.parents(j)) <= set(res.pns_sets[j])
    assert res.config.alpha_pns is not None and res.config.max_parents == 6
    assert set(res.timings) == {"margin", "pns", "orient", "prune", "total"}
    assert len(res.prune_table) == res.oriented.n_edges
    assert structure_metrics(res.dag, truth).f1 > 0.5


def test_deterministic(problem):
    _, data = problem
    a = learn_dag(data, Config(bootstrap_b=5, seed=4))
    b = learn_dag(data, Config(bootstrap_b=5, seed=4))
    assert a.dag == b.dag and a.trace == b.trace and a.pns_sets == b.pns_sets


def test_no_pns_uses_complete_sets(problem):
    _, data = problem
    res = learn_dag(data, Config(use_pns=False))
    assert res.pns_sets == NeighborSets.complete(data.p)


def test_deviance_mode_skips_wald(problem):
    _, data = problem
    res = learn_dag(data, Config(prune_mode="deviance", bootstrap_b=5))
    assert res.prune_table == [] and res.dag == res.oriented


def test_margin_step_restricts(problem):
    _, data = problem
    res = learn_dag(data, Config(use_margin_step=True, bootstrap_b=5))
    margin = marginal_skeleton(data, 0.05)
    assert not np.any(res.pns_sets.adjacency() & ~margin.adjacency())


def test_marginal_skeleton_or_rule(problem):
    _, data = problem
    sk = marginal_skeleton(data, 0.05)
    for j, k in [(0, 1), (2, 5)]:
        either = marginal_test(data, j, k, 0.05).reject or marginal_test(data, k, j, 0.05).reject
        assert (k in sk[j]) == either


def test_independent_pair_usually_empty():
    empties = 0
    for s in range(10):
        d = CountMatrix(np.random.default_rng(s).poisson(3.0, size=(500, 2)))
        empties += learn_dag(d, Config(bootstrap_b=10)).dag.n_edges == 0
    assert empties >= 8


def test_accepts_raw_array():
    res = learn_dag(np.random.default_rng(0).poisson(2, size=(100, 3)), Config(bootstrap_b=3))
    assert res.dag.p == 3


def test_too_few_samples():
    with pytest.raises(ConfigError):
        learn_dag(CountMatrix([[1, 2]]))
