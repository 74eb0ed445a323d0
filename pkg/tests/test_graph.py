"""
Tests for the graph model, homophily and the SBM generator
"""

import numpy as np
import pytest

from gssc.graph import (
    canonical_edges,
    edge_homophily,
    expected_sbm_homophily,
    generate_sbm,
    homophily_ratio,
)
from gssc.utils.errors import GraphInvariantError

from conftest import make_graph


class TestGraph:
    def test_minimal_graph_has_both_csr_directions(self):
        g = make_graph([(0, 1)], [0, 1, 0])
        assert g.n_edges == 1
        assert g.adjacency[0, 1] == 1.0
        assert g.adjacency[1, 0] == 1.0
        assert g.adjacency.nnz == 2

    def test_edges_are_canonicalized(self):
        g = make_graph([(2, 1), (1, 0)], [0, 0, 0])
        np.testing.assert_array_equal(g.edges, [[0, 1], [1, 2]])

    def test_adjacency_is_symmetric(self, ten_node_graph):
        A = ten_node_graph.adjacency
        assert (A != A.T).nnz == 0
        np.testing.assert_array_equal(ten_node_graph.degrees(), np.asarray(A.sum(axis=1)).ravel())

    @pytest.mark.parametrize("edges", [[(0, 0)], [(0, 1), (1, 0)], [(0, 5)]])
    def test_invalid_edges_rejected(self, edges):
        with pytest.raises(GraphInvariantError):
            make_graph(edges, [0, 1, 0])

    def test_label_out_of_range(self):
        with pytest.raises(GraphInvariantError):
            make_graph([(0, 1)], [0, 3, 0], n_classes=2)

    def test_overlapping_splits_rejected(self):
        with pytest.raises(GraphInvariantError):
            make_graph([(0, 1)], [0, 1, 0], train=[0, 1], val=[1])

    def test_arrays_are_read_only(self, path_graph):
        with pytest.raises(ValueError):
            path_graph.features[0, 0] = 1.0
        with pytest.raises(ValueError):
            path_graph.edges[0, 0] = 3

    def test_with_edges_keeps_everything_else(self, path_graph):
        g = path_graph.with_edges([(0, 3)])
        assert g.n_edges == 1
        np.testing.assert_array_equal(g.features, path_graph.features)
        np.testing.assert_array_equal(g.train, path_graph.train)

    def test_canonical_edges_empty(self):
        assert canonical_edges([], 4).shape == (0, 2)


class TestHomophily:
    def test_single_class(self):
        g = make_graph([(0, 1), (1, 2)], [1, 1, 1], n_classes=2)
        assert homophily_ratio(g) == 1.0

    def test_five_cycle(self):
        g = make_graph([(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)], [0, 0, 1, 1, 0])
        assert homophily_ratio(g) == pytest.approx(0.6)

    def test_bipartite(self):
        g = make_graph([(0, 2), (0, 3), (1, 2), (1, 3)], [0, 0, 1, 1])
        assert homophily_ratio(g) == 0.0

    def test_empty_edge_set_is_zero(self, caplog):
        assert edge_homophily(np.zeros((0, 2), dtype=int), np.array([0, 1])) == 0.0
        assert "empty edge set" in caplog.text

    def test_invariant_under_class_permutation(self, ten_node_graph):
        permuted = np.array([2, 0, 1])[ten_node_graph.labels]
        assert homophily_ratio(ten_node_graph, permuted) == homophily_ratio(ten_node_graph)

    def test_labels_override(self, path_graph):
        assert homophily_ratio(path_graph, [0, 1, 0, 1]) == 0.0


class TestGenerateSbm:
    def test_no_inter_class_edges(self):
        g = generate_sbm(100, 4, 0.2, 0.0, 8, 0.5, seed=1, train_per_class=5)
        assert homophily_ratio(g) == 1.0

    def test_expected_homophily_closed_form(self):
        assert expected_sbm_homophily(1000, 5, 0.02, 0.002) == pytest.approx(3.98 / 5.58)
        assert expected_sbm_homophily(1000, 5, 0.02, 0.002) == pytest.approx(0.712, abs=2e-3)

    def test_uniform_probabilities_give_chance_homophily(self):
        assert expected_sbm_homophily(1000, 5, 0.01, 0.01) == pytest.approx(199 / 999)

    def test_empirical_homophily_matches_formula(self):
        g = generate_sbm(1000, 5, 0.02, 0.002, 64, 1.0, seed=1)
        assert homophily_ratio(g) == pytest.approx(expected_sbm_homophily(1000, 5, 0.02, 0.002), abs=0.02)

    def test_deterministic(self):
        a = generate_sbm(100, 4, 0.2, 0.02, 8, 0.5, seed=3, train_per_class=5)
        b = generate_sbm(100, 4, 0.2, 0.02, 8, 0.5, seed=3, train_per_class=5)
        assert a == b

    def test_classes_and_splits(self):
        g = generate_sbm(100, 4, 0.2, 0.02, 8, 0.5, seed=3, train_per_class=5)
        np.testing.assert_array_equal(np.bincount(g.labels), [25, 25, 25, 25])
        np.testing.assert_array_equal(np.bincount(g.labels[g.train]), [5, 5, 5, 5])
        assert len(g.val) == 80 // 3
        assert len(g.test) == 80 - 80 // 3

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n": 101, "n_classes": 4},
            {"p_in": 0.1, "p_out": 0.2},
            {"p_in": 1.5},
            {"dim": 2},
        ],
    )
    def test_invalid_parameters(self, kwargs):
        params = {"n": 100, "n_classes": 4, "p_in": 0.2, "p_out": 0.02, "dim": 8, "feature_noise": 0.5, "seed": 0}
        params.update(kwargs)
        with pytest.raises(ValueError):
            generate_sbm(**params, train_per_class=5)

    def test_class_means_are_orthonormal(self):
        g = generate_sbm(100, 4, 0.2, 0.02, 8, 0.0, seed=2, train_per_class=5)
        means = np.stack([g.features[g.labels == c][0] for c in range(4)])
        np.testing.assert_allclose(means @ means.T, np.eye(4), atol=1e-12)

    def test_feature_offset_is_one_shared_shift(self):
        plain = generate_sbm(100, 4, 0.2, 0.02, 8, 0.5, seed=2, train_per_class=5)
        shifted = generate_sbm(100, 4, 0.2, 0.02, 8, 0.5, seed=2, train_per_class=5, feature_offset=3.0)
        shift = shifted.features - plain.features
        np.testing.assert_allclose(shift, np.broadcast_to(shift[0], shift.shape), atol=1e-12)
        assert np.linalg.norm(shift[0]) == pytest.approx(3.0)
        np.testing.assert_array_equal(shifted.edges, plain.edges)
