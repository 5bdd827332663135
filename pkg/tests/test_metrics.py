import numpy as np
import pytest

from uavswarm.grid import GridSpec
from uavswarm.metrics import (
    MetricsSample,
    VisitGrid,
    avg_node_degree,
    bs_connected_flags,
    components,
    coverage_time,
    tbs,
)
from uavswarm.network import ConnectivityGraph, build_graph


def graph_from_edges(n, edges):
    adj = np.zeros((n, n), dtype=bool)
    for i, j in edges:
        adj[i, j] = adj[j, i] = True
    return ConnectivityGraph(adjacency=adj)


def transitive_closure_components(adj):
    """Oracle: count components via boolean reachability matrix."""
    n = adj.shape[0]
    reach = adj | np.eye(n, dtype=bool)
    for _ in range(n):
        reach = reach @ reach
    labels = set()
    sizes = []
    for i in range(n):
        key = tuple(np.flatnonzero(reach[i]))
        if key not in labels:
            labels.add(key)
            sizes.append(len(key))
    return len(labels), max(sizes)


class TestCoverage:
    def test_empty(self):
        assert VisitGrid(GridSpec(10, 10)).coverage_pct() == 0.0

    def test_full(self):
        g = VisitGrid(GridSpec(10, 10))
        g.counts[:] = 1
        assert g.coverage_pct() == 100.0

    def test_fraction(self):
        g = VisitGrid(GridSpec(60, 60))
        g.counts.ravel()[:900] = 2
        assert g.coverage_pct() == 25.0

    def test_monotone(self):
        g = VisitGrid(GridSpec(5, 5))
        prev = -1.0
        rng = np.random.default_rng(0)
        for _ in range(100):
            g.visit((int(rng.integers(5)), int(rng.integers(5))))
            cov = g.coverage_pct()
            assert cov >= prev
            prev = cov


class TestCoverageTime:
    def test_crossing(self):
        times = [0.0, 250.0, 500.0, 750.0, 1000.0]
        covs = [0.0, 40.0, 80.0, 92.0, 95.0]
        assert coverage_time(times, covs) == 750.0

    def test_censored(self):
        assert coverage_time([0.0, 10.0], [10.0, 50.0]) is None

    def test_first_sample_at_or_above(self):
        assert coverage_time([0.0, 10.0, 20.0], [89.9, 90.0, 99.0]) == 10.0


class TestFairness:
    def test_uniform_is_one(self):
        g = VisitGrid(GridSpec(6, 6))
        g.counts[:] = 3
        assert g.fairness() == pytest.approx(1.0)

    def test_two_cell_example(self):
        g = VisitGrid(GridSpec(2, 1))
        g.counts[0, 0] = 1
        assert g.fairness() == pytest.approx(0.5)

    def test_all_zero_undefined(self):
        assert VisitGrid(GridSpec(4, 4)).fairness() is None

    def test_jain_bounds(self):
        rng = np.random.default_rng(1)
        g = VisitGrid(GridSpec(8, 8))
        for _ in range(50):
            g.counts[:] = rng.integers(0, 20, size=(8, 8))
            if g.counts.sum() == 0:
                continue
            f = g.fairness()
            assert 1.0 / 64 - 1e-12 <= f <= 1.0 + 1e-12

    def test_scale_invariant(self):
        rng = np.random.default_rng(2)
        g1 = VisitGrid(GridSpec(8, 8))
        g2 = VisitGrid(GridSpec(8, 8))
        counts = rng.integers(0, 7, size=(8, 8))
        g1.counts[:] = counts
        g2.counts[:] = 5 * counts
        assert g1.fairness() == pytest.approx(g2.fairness(), rel=1e-12)


class TestComponents:
    def test_complete_graph(self):
        pos = np.zeros((6, 2))
        g = build_graph(pos, 10.0)
        assert components(g) == (1, 6)

    def test_isolated_nodes(self):
        g = graph_from_edges(31, [])
        assert components(g) == (31, 1)

    def test_matches_transitive_closure_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            n = int(rng.integers(1, 11))
            adj = rng.random((n, n)) < 0.3
            adj = adj | adj.T
            np.fill_diagonal(adj, False)
            g = ConnectivityGraph(adjacency=adj)
            assert components(g) == transitive_closure_components(adj)

    def test_adding_edges_never_fragments(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            n = int(rng.integers(2, 10))
            adj = rng.random((n, n)) < 0.2
            adj = adj | adj.T
            np.fill_diagonal(adj, False)
            ncc0, giant0 = components(ConnectivityGraph(adjacency=adj))
            missing = [(i, j) for i in range(n) for j in range(i + 1, n) if not adj[i, j]]
            if not missing:
                continue
            i, j = missing[int(rng.integers(len(missing)))]
            adj2 = adj.copy()
            adj2[i, j] = adj2[j, i] = True
            ncc1, giant1 = components(ConnectivityGraph(adjacency=adj2))
            assert ncc1 <= ncc0
            assert giant1 >= giant0


class TestAvgNodeDegree:
    def test_complete_five(self):
        g = graph_from_edges(5, [(i, j) for i in range(5) for j in range(i + 1, 5)])
        assert avg_node_degree(g) == 4.0

    def test_no_edges(self):
        assert avg_node_degree(graph_from_edges(4, [])) == 0.0

    def test_path_of_three(self):
        g = graph_from_edges(3, [(0, 1), (1, 2)])
        assert avg_node_degree(g) == pytest.approx(4.0 / 3.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            avg_node_degree(ConnectivityGraph(adjacency=np.zeros((0, 0), dtype=bool)))


class TestTbs:
    def test_always_connected(self):
        samples = [np.ones(5, dtype=bool) for _ in range(10)]
        assert tbs(samples) == 100.0

    def test_half_connected_single_uav(self):
        samples = [np.array([i % 2 == 0]) for i in range(10)]
        assert tbs(samples) == 50.0

    def test_failed_uavs_shrink_samples(self):
        samples = [np.ones(4, dtype=bool)] * 5 + [np.ones(2, dtype=bool)] * 5
        assert tbs(samples) == 100.0

    def test_empty(self):
        assert tbs([]) == 0.0

    def test_bs_connected_flags(self):
        # node 0 is the BS: 0-1-2 chain plus isolated 3
        g = graph_from_edges(4, [(0, 1), (1, 2)])
        np.testing.assert_array_equal(bs_connected_flags(g), [True, True, False])


def test_metrics_sample_instant_pct():
    s = MetricsSample(0.0, 10.0, 1, 2.0, 3, np.array([True, False, True, True]))
    assert s.tbs_instant_pct == 75.0
    empty = MetricsSample(0.0, 10.0, 1, 0.0, 1, np.zeros(0, dtype=bool))
    assert empty.tbs_instant_pct == 0.0
