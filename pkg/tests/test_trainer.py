"""
Tests for the lower step and the bi-level training loop
"""

import numpy as np
import pytest
from pydantic import ValidationError

from gssc.contrast import sample_edge_batch, total_loss
from gssc.graph import Graph, generate_sbm, inject_label_noise
from gssc.nn import SGD, Adam, init_backbone
from gssc.sparsifier import SparsifierState, edge_probs, full_subgraph, fuse, init_sparsifier
from gssc.training import labeled_mask, lower_step, train
from gssc.training.trainer import _draw_subgraph
from gssc.utils.errors import DegenerateSubgraphError, TrainingError
from gssc.utils.rng import derive_seed
from gssc.utils.schemas import NoiseSpec, TrainConfig

from conftest import make_graph


def initial_psi(graph, config):
    """The sparsifier a run starts from, before any upper step"""
    return init_sparsifier(
        graph.n_features, config.hidden, config.fusion_alpha, config.temperature, derive_seed(config.seed, "psi"),
        features=graph.features, edges=graph.edges,
    )


def expected_homophily(graph, psi):
    """True-label homophily of a draw from `psi`, in expectation over the Gumbel noise"""
    keep = 1.0 - np.exp(-fuse(edge_probs(graph.features, graph.edges, psi), psi.fusion_alpha))
    same = graph.labels[graph.edges[:, 0]] == graph.labels[graph.edges[:, 1]]
    return float(keep @ same / keep.sum())


@pytest.fixture
def theta(small_sbm):
    return init_backbone(small_sbm.n_features, 16, small_sbm.n_classes, 2, 0.0, seed=0)


class TestLowerStep:
    def test_zero_learning_rate_leaves_parameters(self, small_sbm, theta, fast_config):
        before = {name: p.copy() for name, p in theta.parameters().items()}
        result = lower_step(theta, full_subgraph(small_sbm.edges), small_sbm, fast_config, 0, SGD(0.0))
        assert len(result.reports) == int(np.ceil(small_sbm.n_edges / fast_config.batch_size))
        for name, p in theta.parameters().items():
            np.testing.assert_array_equal(p, before[name])

    def test_updates_parameters(self, small_sbm, theta, fast_config):
        before = theta.head_f.copy()
        lower_step(theta, full_subgraph(small_sbm.edges), small_sbm, fast_config, 0, Adam(0.01))
        assert not np.array_equal(theta.head_f, before)

    def test_gradient_steps_lower_the_loss_on_a_fixed_batch(self, small_sbm, theta):
        batch = sample_edge_batch(full_subgraph(small_sbm.edges), small_sbm.n_nodes, 64, 3, seed=0)
        labeled = labeled_mask(small_sbm)
        optimizer = SGD(1e-3)

        def loss():
            report, grads, _ = total_loss(batch, small_sbm.features, small_sbm.labels, labeled, theta, update_running=False)
            return report.total, grads

        start, _ = loss()
        for _ in range(10):
            _, grads = loss()
            optimizer.step(theta.parameters(), grads)
        end, _ = loss()
        assert end < start

    def test_deterministic(self, small_sbm, fast_config):
        a = init_backbone(small_sbm.n_features, 16, small_sbm.n_classes, 2, 0.3, seed=0)
        b = a.copy()
        config = fast_config.model_copy(update={"dropout": 0.3})
        ra = lower_step(a, full_subgraph(small_sbm.edges), small_sbm, config, 7, Adam(0.01))
        rb = lower_step(b, full_subgraph(small_sbm.edges), small_sbm, config, 7, Adam(0.01))
        assert [r.total for r in ra.reports] == [r.total for r in rb.reports]
        for name, p in a.parameters().items():
            np.testing.assert_array_equal(p, b.parameters()[name])

    def test_non_finite_loss_stops_training(self, small_sbm, theta, fast_config):
        theta.head_f[:] = np.inf
        with pytest.raises(TrainingError) as info:
            lower_step(theta, full_subgraph(small_sbm.edges), small_sbm, fast_config, 0, SGD(0.1))
        assert info.value.dump["batch"] == 0
        assert "edges" in info.value.dump

    def test_unlabeled_batches_are_counted(self, fast_config):
        g = make_graph([(0, 1), (2, 3)], [0, 1, 0, 1], train=[0])
        theta = init_backbone(4, 16, 2, 2, 0.0, seed=0)
        config = fast_config.model_copy(update={"batch_size": 1, "negatives": 1, "exclude_neighbors": False})
        result = lower_step(theta, full_subgraph(g.edges), g, config, 0, SGD(0.01))
        assert result.unlabeled_batches == 1
        assert len(result.reports) == 2


class TestDrawSubgraph:
    def repelling_graph(self):
        features = np.array([[1.0], [-1.0], [1.0], [-1.0]])
        return Graph(features, [(0, 1), (1, 2), (2, 3)], [0, 1, 0, 1], 2, [0, 1], [2], [3])

    def test_empty_draw_falls_back_to_full_edge_set(self):
        g = self.repelling_graph()
        psi = SparsifierState(np.array([[10.0]]), 0.0, 0.5)
        sub, drawn, _, fallback = _draw_subgraph(g, psi, seed=0)
        assert fallback
        assert sub.n_kept == 3
        assert drawn.n_kept == 0

    def test_non_empty_draw_is_used(self, small_sbm):
        psi = init_sparsifier(small_sbm.n_features, 8, 0.3, 0.5, seed=0)
        sub, drawn, seed, fallback = _draw_subgraph(small_sbm, psi, seed=4)
        assert not fallback
        assert sub is drawn
        assert seed == 4
        assert 0 < sub.n_kept <= small_sbm.n_edges


class TestTrain:
    def test_history_shape_and_invariants(self, small_sbm, fast_config):
        result = train(small_sbm, fast_config)
        assert [r.epoch for r in result.history] == [0, 1, 2, 3]
        assert [r.phase for r in result.history] == ["warmup", "warmup", "bilevel", "bilevel"]
        for record in result.history:
            assert 0 <= record.hard_edge_count <= small_sbm.n_edges
            assert 0.0 <= record.hard_homophily_true <= 1.0
            assert record.loss_total == pytest.approx(record.loss_smooth + record.loss_cla)
        for record in result.history[:2]:
            assert record.hard_edge_count == small_sbm.n_edges
        assert not result.theta.training

    def test_deterministic(self, small_sbm, fast_config):
        a = train(small_sbm, fast_config)
        b = train(small_sbm, fast_config)
        assert [r.model_dump() for r in a.history] == [r.model_dump() for r in b.history]
        np.testing.assert_array_equal(a.psi.embed_weight, b.psi.embed_weight)

    def test_seed_changes_the_run(self, small_sbm, fast_config):
        a = train(small_sbm, fast_config)
        b = train(small_sbm, fast_config.model_copy(update={"seed": 1}))
        assert [r.loss_total for r in a.history] != [r.loss_total for r in b.history]

    def test_warmup_only_keeps_psi_at_init(self, small_sbm, fast_config):
        config = fast_config.model_copy(update={"warmup_epochs": 4})
        result = train(small_sbm, config)
        init = initial_psi(small_sbm, fast_config)
        np.testing.assert_array_equal(result.psi.embed_weight, init.embed_weight)
        assert all(r.phase == "warmup" for r in result.history)

    def test_frozen_sparsifier(self, small_sbm, fast_config):
        result = train(small_sbm, fast_config.model_copy(update={"freeze_sparsifier": True}))
        init = initial_psi(small_sbm, fast_config)
        np.testing.assert_array_equal(result.psi.embed_weight, init.embed_weight)

    def test_bilevel_phase_moves_psi(self, small_sbm, fast_config):
        result = train(small_sbm, fast_config)
        init = initial_psi(small_sbm, fast_config)
        assert not np.array_equal(result.psi.embed_weight, init.embed_weight)

    def test_best_is_the_earliest_maximum(self, small_sbm, fast_config):
        result = train(small_sbm, fast_config)
        val = [r.val_acc for r in result.history]
        assert result.best_epoch == int(np.argmax(val))
        assert result.best_record.val_acc == max(val)
        assert not result.best_theta.training

    def test_explicit_weight_mode(self, small_sbm, fast_config):
        result = train(small_sbm, fast_config.model_copy(update={"objective_mode": "explicit-weight"}))
        assert len(result.history) == 4
        assert all(np.isfinite(r.loss_total) for r in result.history)

    def test_explicit_weight_mode_needs_a_finite_margin(self, fast_config):
        with pytest.raises(ValidationError, match="finite margin"):
            TrainConfig(objective_mode="explicit-weight", margin=float("inf"))

    def test_callback_sees_every_epoch(self, small_sbm, fast_config):
        seen = []
        train(small_sbm, fast_config, on_epoch=seen.append)
        assert [r.epoch for r in seen] == [0, 1, 2, 3]

    def test_graph_without_edges(self, fast_config):
        with pytest.raises(DegenerateSubgraphError):
            train(make_graph([], [0, 1, 0]), fast_config)

    def test_empty_train_split(self, fast_config):
        with pytest.raises(TrainingError):
            train(make_graph([(0, 1)], [0, 1], train=[], val=[0], test=[1]), fast_config)


@pytest.mark.slow
class TestLearning:
    @pytest.fixture
    def sbm(self):
        return generate_sbm(400, 4, 0.1, 0.01, 32, 1.0, seed=3, train_per_class=20, n_val=80, n_test=160)

    @pytest.fixture
    def config(self, fast_config):
        return fast_config.model_copy(update={"epochs": 60, "warmup_epochs": 30, "hidden": 32, "dropout": 0.2})

    def test_beats_chance_clearly(self, sbm, config):
        result = train(sbm, config)
        assert result.best_record.test_acc > 0.6

    def test_tolerates_label_noise(self, sbm, config):
        noisy = inject_label_noise(sbm, NoiseSpec(kind="label-symmetric", ratio=0.3, seed=1))
        result = train(noisy, config)
        assert result.best_record.test_acc > 0.5


@pytest.mark.slow
class TestHomophilyObjective:
    @pytest.fixture
    def sbm(self):
        # the shared offset makes every initial edge score positive, so λ starts high
        return generate_sbm(
            400, 4, 0.06, 0.013, 32, 0.5, seed=3, train_per_class=20, n_val=80, n_test=160, feature_offset=4.0,
        )

    @pytest.fixture
    def config(self, fast_config):
        return fast_config.model_copy(update={
            "epochs": 150, "warmup_epochs": 30, "hidden": 32, "dropout": 0.2, "fusion_alpha": 0.1,
        })

    def test_raises_homophily_and_prunes_edges(self, sbm, config):
        result = train(sbm, config)
        bilevel = [r for r in result.history if r.phase == "bilevel"]
        start = expected_homophily(sbm, initial_psi(sbm, config))
        late = bilevel[-10:]
        assert np.mean([r.hard_homophily_true for r in late]) >= start + 0.05
        assert np.mean([r.hard_edge_count for r in late]) < np.mean([r.hard_edge_count for r in bilevel[:5]])
        assert expected_homophily(sbm, result.psi) >= start + 0.05

    def test_no_worse_than_warmup_only(self, sbm, config):
        gssc, baseline = [], []
        for seed in range(3):
            run = config.model_copy(update={"seed": seed})
            gssc.append(train(sbm, run).best_record.test_acc)
            baseline.append(train(sbm, run.model_copy(update={"warmup_epochs": run.epochs})).best_record.test_acc)
        assert np.mean(gssc) >= np.mean(baseline) - 0.01


@pytest.mark.slow
class TestExplicitWeightCollapse:
    @pytest.fixture
    def sbm(self):
        # more feature dimensions than nodes, so W can push every edge score below zero
        return generate_sbm(120, 4, 0.2, 0.02, 128, 1.0, seed=5, train_per_class=5, n_val=20, n_test=40)

    def test_edge_count_collapses(self, sbm, fast_config):
        config = fast_config.model_copy(update={
            "epochs": 120, "warmup_epochs": 20, "hidden": 32, "fusion_alpha": 0.0,
            "objective_mode": "explicit-weight", "lr_psi": 0.05,
        })
        result = train(sbm, config)
        bilevel = [r for r in result.history if r.phase == "bilevel"]
        assert len(bilevel) == 100
        assert min(r.hard_edge_count for r in bilevel) < 0.1 * sbm.n_edges
        keep = 1.0 - np.exp(-fuse(edge_probs(sbm.features, sbm.edges, result.psi), 0.0))
        assert keep.sum() < 0.1 * sbm.n_edges

    def test_homophily_mode_keeps_edges(self, sbm, fast_config):
        config = fast_config.model_copy(update={
            "epochs": 120, "warmup_epochs": 20, "hidden": 32, "fusion_alpha": 0.0, "lr_psi": 0.05,
        })
        result = train(sbm, config)
        assert min(r.hard_edge_count for r in result.history) >= 0.1 * sbm.n_edges
