"""
Tests for edge mini-batches and degree-proportional negatives
"""

import numpy as np
import pytest
from scipy.stats import chisquare

from gssc.contrast import (
    draw_negatives,
    enumerate_edge_batch,
    iter_edge_batches,
    negative_distribution,
    sample_edge_batch,
)
from gssc.graph import edge_degrees
from gssc.sparsifier import full_subgraph, gumbel_sample
from gssc.utils.errors import DegenerateSubgraphError

STAR = np.array([[0, k] for k in range(1, 6)])


def dropped_all(edges):
    return gumbel_sample(np.ones(len(edges)), 0.5, seed=0, edges=edges, noise=np.full(len(edges), -50.0))


class TestNegativeDistribution:
    def test_degrees_of_kept_edges(self):
        np.testing.assert_array_equal(edge_degrees(STAR, 6), [5, 1, 1, 1, 1, 1])

    def test_star_center_has_half_the_mass(self):
        dist = negative_distribution(STAR, 6)
        assert dist[0] == pytest.approx(0.5)
        np.testing.assert_allclose(dist[1:], 0.1)

    def test_empirical_frequency_of_star_center(self):
        rng = np.random.default_rng(0)
        draws = draw_negatives(rng, negative_distribution(STAR, 6), STAR[:1], 100_000)
        assert np.mean(draws == 0) == pytest.approx(0.5, abs=0.01)

    def test_goodness_of_fit(self, small_sbm):
        dist = negative_distribution(small_sbm.edges, small_sbm.n_nodes)
        rng = np.random.default_rng(3)
        draws = draw_negatives(rng, dist, small_sbm.edges[:200], 100).ravel()
        observed = np.bincount(draws, minlength=small_sbm.n_nodes)
        support = dist > 0
        expected = dist[support] * len(draws)
        assert chisquare(observed[support], expected).pvalue > 1e-3
        assert observed[~support].sum() == 0

    def test_isolated_nodes_are_never_drawn(self):
        dist = negative_distribution(np.array([[0, 1], [1, 2]]), 5)
        assert dist[3] == dist[4] == 0.0

    def test_empty_edge_set(self):
        with pytest.raises(DegenerateSubgraphError):
            negative_distribution(np.zeros((0, 2), dtype=int), 4)


class TestSampleEdgeBatch:
    def test_shapes_and_membership(self, small_sbm):
        sub = full_subgraph(small_sbm.edges)
        batch = sample_edge_batch(sub, small_sbm.n_nodes, 32, 4, seed=1)
        assert batch.edges.shape == (32, 2)
        assert batch.negatives.shape == (32, 4)
        np.testing.assert_array_equal(small_sbm.edges[batch.edge_ids], batch.edges)
        assert len(np.unique(batch.edge_ids)) == 32

    def test_batch_larger_than_edge_set_takes_every_edge(self, path_graph):
        batch = sample_edge_batch(full_subgraph(path_graph.edges), 4, 50, 2, seed=0)
        assert batch.size == 3
        assert sorted(batch.edge_ids.tolist()) == [0, 1, 2]

    def test_only_kept_edges_are_batched(self, small_sbm):
        edges = small_sbm.edges
        noise = np.where(np.arange(len(edges)) % 2 == 0, 50.0, -50.0)
        sub = gumbel_sample(np.ones(len(edges)), 0.5, seed=0, edges=edges, noise=noise)
        batch = sample_edge_batch(sub, small_sbm.n_nodes, 1000, 2, seed=0)
        assert np.all(batch.edge_ids % 2 == 0)
        assert batch.size == sub.n_kept

    def test_negatives_follow_kept_degrees(self):
        edges = np.array([[0, 1], [2, 3]])
        sub = gumbel_sample(np.ones(2), 0.5, seed=0, edges=edges, noise=np.array([50.0, -50.0]))
        batch = sample_edge_batch(sub, 4, 1, 200, seed=0)
        assert set(np.unique(batch.negatives)) <= {0, 1}

    def test_zero_negatives(self, path_graph):
        with pytest.raises(ValueError):
            sample_edge_batch(full_subgraph(path_graph.edges), 4, 2, 0, seed=0)

    def test_empty_subgraph(self, path_graph):
        with pytest.raises(DegenerateSubgraphError):
            sample_edge_batch(dropped_all(path_graph.edges), 4, 2, 1, seed=0)

    def test_deterministic(self, small_sbm):
        sub = full_subgraph(small_sbm.edges)
        a = sample_edge_batch(sub, small_sbm.n_nodes, 16, 3, seed=8)
        b = sample_edge_batch(sub, small_sbm.n_nodes, 16, 3, seed=8)
        np.testing.assert_array_equal(a.edges, b.edges)
        np.testing.assert_array_equal(a.negatives, b.negatives)

    def test_neighbor_exclusion(self, small_sbm):
        sub = full_subgraph(small_sbm.edges)
        batch = sample_edge_batch(sub, small_sbm.n_nodes, 64, 5, seed=2, exclude_neighbors=True)
        neighbors = {tuple(e) for e in small_sbm.edges.tolist()}
        neighbors |= {(b, a) for a, b in neighbors}
        for (i, j), row in zip(batch.edges.tolist(), batch.negatives.tolist()):
            for k in row:
                assert k not in (i, j)
                assert (i, k) not in neighbors


class TestIterEdgeBatches:
    def test_epoch_covers_each_kept_edge_once(self, small_sbm):
        sub = full_subgraph(small_sbm.edges)
        ids = np.concatenate([b.edge_ids for b in iter_edge_batches(sub, small_sbm.n_nodes, 50, 2, seed=0)])
        assert sorted(ids.tolist()) == list(range(small_sbm.n_edges))

    def test_include_dropped_visits_every_edge(self, path_graph):
        edges = path_graph.edges
        sub = gumbel_sample(np.ones(3), 0.5, seed=0, edges=edges, noise=np.array([50.0, -50.0, -50.0]))
        ids = np.concatenate([b.edge_ids for b in iter_edge_batches(sub, 4, 2, 1, seed=0, include_dropped=True)])
        assert sorted(ids.tolist()) == [0, 1, 2]


class TestEnumerateEdgeBatch:
    def test_negatives_are_exactly_the_non_neighbors(self, path_graph):
        batch = enumerate_edge_batch(full_subgraph(path_graph.edges), 4)
        for (i, _), row, mask in zip(batch.edges, batch.negatives, batch.negative_mask):
            adjacent = {i} | {b for a, b in path_graph.edges.tolist() if a == i} | {a for a, b in path_graph.edges.tolist() if b == i}
            assert set(row[mask].tolist()) == set(range(4)) - adjacent

    def test_mask_width(self, path_graph):
        batch = enumerate_edge_batch(full_subgraph(path_graph.edges), 4)
        np.testing.assert_array_equal(batch.negative_mask.sum(axis=1), [2, 1, 1])

    def test_nodes_and_relabel(self, path_graph):
        batch = enumerate_edge_batch(full_subgraph(path_graph.edges), 4)
        nodes = batch.nodes()
        np.testing.assert_array_equal(nodes, [0, 1, 2, 3])
        np.testing.assert_array_equal(batch.relabel(nodes).edges, batch.edges)
