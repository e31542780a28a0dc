import numpy as np
import pytest
from hypothesis import given, strategies as st

from learndag.core import CountMatrix, Dag, NeighborSets
from learndag.pns import (
    bootstrap_edge_frequency,
    estimate_undirected,
    node_rejections,
    pns_bootstrap,
)
from learndag.simulate import TrueModel, sample
from learndag.stattests import alpha_schedule, ci_test

from conftest import chain_model


def moral_example(seed, n=2000):
    """Five nodes; node 0 isolated, 3 -> 4 and both 3, 4 point into 1 and 2."""
    dag = Dag(5, [(3, 4), (3, 1), (4, 1), (3, 2), (4, 2)])
    w = {(3, 4): 0.35, (3, 1): 0.3, (4, 1): 0.3, (3, 2): -0.3, (4, 2): 0.25}
    return sample(TrueModel(dag, np.array([0.8, 0.3, 0.6, 0.7, 0.5]), w), n, seed=seed)


def test_five_node_moral_skeleton():
    # N(1)={}, N(2)={4,5}, N(3)={4,5}, N(4)={2,3,5}, N(5)={2,3,4} in 1-based labels
    expect = NeighborSets([[], [3, 4], [3, 4], [1, 2, 4], [1, 2, 3]])
    hits = sum(estimate_undirected(moral_example(s), alpha_schedule(2000, 0.15)) == expect
               for s in range(10))
    assert hits >= 8


def test_undirected_uses_full_conditioning(chain_data):
    rej, bad = node_rejections(chain_data, 0, 0.01)
    assert bad == 0
    for k in (1, 2, 3):
        ref = ci_test(chain_data, 0, k, [m for m in (1, 2, 3) if m != k], 0.01)
        assert rej[k] == ref.reject


def test_output_symmetric(chain_data):
    ns = estimate_undirected(chain_data, 0.01)
    assert ns.is_symmetric()
    assert all(j not in ns[j] for j in range(ns.p))
    assert estimate_undirected(chain_data, 0.01, "and").adjacency().sum() <= ns.adjacency().sum()


def test_two_nodes_empty_conditioning():
    rng = np.random.default_rng(1)
    x = rng.poisson(2.0, size=500)
    y = rng.poisson(np.exp(0.2 + 0.3 * x))
    d = CountMatrix(np.column_stack([x, y]))
    ns = estimate_undirected(d, 0.01)
    assert ns == NeighborSets([[1], [0]])
    assert ci_test(d, 0, 1, [], 0.01).reject


def test_independent_columns_near_empty():
    rng = np.random.default_rng(7)
    p, n = 8, 5000
    level = alpha_schedule(n, 0.15)
    false = 0
    for _ in range(5):
        d = CountMatrix(rng.poisson(3.0, size=(n, p)))
        false += len(estimate_undirected(d, level).undirected_edges())
    # OR rule doubles the per-pair rate; allow a 3x margin on the average
    assert false / 5 <= level * p * (p - 1) / 2 * 3 + 1


def test_saturated_case_runs():
    rng = np.random.default_rng(0)
    d = CountMatrix(rng.poisson(2.0, size=(12, 16)))
    rej, _ = node_rejections(d, 0, 0.05)
    assert rej.shape == (16,) and not rej[0]


def test_frequency_invariants(chain_data):
    f = bootstrap_edge_frequency(chain_data, 0.01, b=8, seed=1)
    assert np.array_equal(f.counts, f.counts.T)
    assert np.all(np.diag(f.counts) == 0)
    assert f.counts.min() >= 0 and f.counts.max() <= 8


def test_single_replicate_equals_resample(chain_data):
    ss = np.random.SeedSequence(5).spawn(1)[0]
    rows = np.random.default_rng(ss).integers(0, chain_data.n, size=chain_data.n)
    ref = estimate_undirected(chain_data.take_rows(rows), 0.01)
    assert pns_bootstrap(chain_data, 0.01, b=1, threshold=0.2, seed=5) == ref


def test_threshold_one_is_intersection(chain_data):
    b, seed = 4, 2
    adj = np.ones((4, 4), dtype=bool)
    for ss in np.random.SeedSequence(seed).spawn(b):
        rows = np.random.default_rng(ss).integers(0, chain_data.n, size=chain_data.n)
        adj &= estimate_undirected(chain_data.take_rows(rows), 0.01).adjacency()
    assert pns_bootstrap(chain_data, 0.01, b=b, threshold=1.0, seed=seed).adjacency().tolist() == adj.tolist()


@given(st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_monotone_in_threshold(t1, t2):
    lo, hi = sorted((t1, t2))
    rng = np.random.default_rng(0)
    counts = rng.integers(0, 21, size=(5, 5))
    counts = np.triu(counts, 1)
    counts = counts + counts.T
    from learndag.pns import EdgeFrequency

    f = EdgeFrequency(counts, 20)
    a_lo, a_hi = f.select(lo).adjacency(), f.select(hi).adjacency()
    assert not np.any(a_hi & ~a_lo)


def test_deterministic_and_threaded(chain_data):
    a = bootstrap_edge_frequency(chain_data, 0.01, b=6, seed=11)
    b = bootstrap_edge_frequency(chain_data, 0.01, b=6, seed=11, n_jobs=3)
    assert np.array_equal(a.counts, b.counts)


def test_validation(chain_data):
    with pytest.raises(ValueError):
        pns_bootstrap(chain_data, 0.01, b=0)
    with pytest.raises(ValueError):
        pns_bootstrap(chain_data, 0.01, threshold=0.0)


@pytest.mark.slow
def test_chain_skeleton_recovered():
    truth = NeighborSets([[1], [0, 2], [1, 3], [2]])
    hits = 0
    for s in range(20):
        d = sample(chain_model(weight=0.25), 2000, seed=100 + s)
        hits += pns_bootstrap(d, alpha_schedule(2000, 0.15), b=50, threshold=0.2, seed=s) == truth
    assert hits >= 18


@pytest.mark.slow
def test_strong_chain_skeleton_contained():
    # regressing a parent on its descendants is misspecified, so strong
    # chains pick up extra (screening-harmless) edges under the OR rule
    truth = NeighborSets([[1], [0, 2], [1, 3], [2]]).adjacency()
    for s in range(10):
        d = sample(chain_model(weight=0.4), 2000, seed=100 + s)
        a = pns_bootstrap(d, alpha_schedule(2000, 0.15), b=50, threshold=0.2, seed=s).adjacency()
        assert not np.any(truth & ~a)
