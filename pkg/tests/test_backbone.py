"""
Tests for the MLP backbone, heads, optimizers and checkpoints
"""

import numpy as np
import pytest

from gssc.nn import (
    SGD,
    Adam,
    grad_check,
    head_apply,
    head_backward,
    init_backbone,
    make_optimizer,
    mlp_backward,
    mlp_forward,
    predict_logits,
)
from gssc.nn.checkpoint import load_checkpoint, save_checkpoint
from gssc.sparsifier import init_sparsifier
from gssc.utils.errors import CheckpointError, NonFiniteError, ShapeError
from gssc.utils.schemas import TrainConfig


@pytest.fixture
def theta():
    return init_backbone(in_dim=6, hidden=8, n_classes=3, layers=2, dropout=0.0, seed=1)


@pytest.fixture
def X():
    return np.random.default_rng(0).standard_normal((12, 6))


class TestInit:
    def test_shapes(self, theta):
        assert theta.weights[0].shape == (6, 8)
        assert theta.weights[1].shape == (8, 8)
        assert theta.head_f.shape == (8, 3)
        assert theta.head_g.shape == (8, 3)
        assert theta.interp_weight.shape == (16,)

    def test_interpolation_starts_at_the_midpoint(self, theta):
        np.testing.assert_array_equal(theta.interp_weight, 0.0)

    def test_glorot_bounds(self, theta):
        assert np.abs(theta.weights[0]).max() <= np.sqrt(6 / 14)
        assert np.abs(theta.weights[1]).max() <= np.sqrt(6 / 16)

    def test_parameter_names(self, theta):
        assert set(theta.parameters()) == {
            "layers.0.weight", "layers.0.bn_scale", "layers.0.bn_shift",
            "layers.1.weight", "layers.1.bn_scale", "layers.1.bn_shift",
            "head_f", "head_g", "interp_weight",
        }

    def test_with_parameters_copies(self, theta):
        params = {name: p + 1.0 for name, p in theta.parameters().items()}
        other = theta.with_parameters(params)
        np.testing.assert_array_equal(other.weights[1], theta.weights[1] + 1.0)
        np.testing.assert_array_equal(other.bn_shift[0], theta.bn_shift[0] + 1.0)
        assert not np.shares_memory(other.head_f, theta.head_f)


class TestForward:
    def test_training_mode_normalizes_each_column(self, theta, X):
        H, _ = mlp_forward(X, theta)
        np.testing.assert_allclose(H.mean(axis=0), 0.0, atol=1e-10)

    def test_eval_is_deterministic_and_leaves_buffers(self, theta, X):
        theta.eval()
        before = [m.copy() for m in theta.running_mean]
        a, _ = mlp_forward(X, theta, seed=1)
        b, _ = mlp_forward(X, theta, seed=2)
        np.testing.assert_array_equal(a, b)
        for m, m0 in zip(theta.running_mean, before):
            np.testing.assert_array_equal(m, m0)

    def test_running_statistics_update(self, theta, X):
        mlp_forward(X, theta)
        A = np.maximum(X @ theta.weights[0], 0.0)
        np.testing.assert_allclose(theta.running_mean[0], 0.1 * A.mean(axis=0))
        np.testing.assert_allclose(theta.running_var[0], np.maximum(0.9 + 0.1 * A.var(axis=0, ddof=1), 1e-5))

    def test_dropout_follows_seed(self, X):
        theta = init_backbone(6, 8, 3, 2, dropout=0.5, seed=1)
        a, _ = mlp_forward(X, theta, seed=4, update_running=False)
        b, _ = mlp_forward(X, theta, seed=4, update_running=False)
        c, _ = mlp_forward(X, theta, seed=5, update_running=False)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_shape_mismatch(self, theta):
        with pytest.raises(ShapeError):
            mlp_forward(np.zeros((4, 5)), theta)

    def test_non_finite_input(self, theta, X):
        X[0, 0] = np.nan
        with pytest.raises(NonFiniteError):
            mlp_forward(X, theta)

    def test_predict_logits_restores_mode(self, theta, X):
        theta.train()
        logits = predict_logits(X, theta)
        assert theta.training
        assert logits.shape == (12, 3)


class TestBackward:
    @pytest.mark.parametrize("dropout", [0.0, 0.4])
    def test_mlp_and_heads_match_finite_differences(self, X, dropout):
        template = init_backbone(6, 8, 3, 2, dropout=dropout, seed=2)
        rng = np.random.default_rng(9)
        target_y = rng.standard_normal((12, 3))
        target_z = rng.standard_normal((12, 3))

        def objective(params):
            state = template.with_parameters(params)
            H, cache = mlp_forward(X, state, seed=3)
            Y, Z = head_apply(H, state)
            value = 0.5 * np.sum((Y - target_y) ** 2) + 0.5 * np.sum((Z - target_z) ** 2)
            grads, dH = head_backward(H, Y - target_y, Z - target_z, state)
            grads.update(mlp_backward(dH, state, cache))
            return value, grads

        params = {k: v for k, v in template.parameters().items() if k != "interp_weight"}
        assert grad_check(objective, params) < 1e-4

    def test_eval_mode_backward(self, X):
        template = init_backbone(6, 8, 3, 1, dropout=0.0, seed=2)
        template.running_var[0] = np.full(8, 0.7)
        template.eval()

        def objective(params):
            state = template.with_parameters(params)
            H, cache = mlp_forward(X, state)
            return float(np.sum(H ** 2)), mlp_backward(2 * H, state, cache)

        params = {k: v for k, v in template.parameters().items() if k.startswith("layers.")}
        assert grad_check(objective, params) < 1e-4


class TestGradCheck:
    def test_quadratic(self):
        def objective(params):
            return 0.5 * float(np.sum(params["w"] ** 2)), {"w": params["w"]}

        assert grad_check(objective, {"w": np.arange(5.0)}) < 1e-8

    def test_wrong_gradient_is_caught(self):
        def objective(params):
            return float(np.sum(params["w"] ** 3)), {"w": 2 * params["w"] ** 2}

        assert grad_check(objective, {"w": np.array([1.0, 2.0])}) > 0.1

    def test_large_tensors_use_probes(self):
        def objective(params):
            return float(np.sum(np.sin(params["w"]))), {"w": np.cos(params["w"])}

        w = np.random.default_rng(0).standard_normal(500)
        assert grad_check(objective, {"w": w}, max_coords=10, probes=4) < 1e-6

    def test_eps_range(self):
        with pytest.raises(ValueError):
            grad_check(lambda p: (0.0, {}), {"w": np.zeros(1)}, eps=0.1)


class TestOptimizers:
    def test_zero_learning_rate_is_noop(self):
        w = np.array([1.0, -2.0])
        Adam(0.0).step({"w": w}, {"w": np.array([3.0, 3.0])})
        np.testing.assert_array_equal(w, [1.0, -2.0])

    def test_sgd_on_quadratic(self):
        w = np.array([1.0, -2.0, 4.0])
        SGD(0.1).step({"w": w}, {"w": w.copy()})
        np.testing.assert_allclose(w, 0.9 * np.array([1.0, -2.0, 4.0]))

    def test_weight_decay(self):
        w = np.array([2.0])
        SGD(0.5, weight_decay=0.1).step({"w": w}, {"w": np.array([0.0])})
        np.testing.assert_allclose(w, [1.9])

    def test_adam_first_step_has_learning_rate_size(self):
        w = np.array([0.0, 0.0])
        delta = Adam(0.01).step({"w": w}, {"w": np.array([5.0, -0.001])})
        np.testing.assert_allclose(delta["w"], [-0.01, 0.01], rtol=1e-4)

    def test_make_optimizer(self):
        assert isinstance(make_optimizer("sgd", 0.1), SGD)
        assert isinstance(make_optimizer("adam", 0.1), Adam)
        with pytest.raises(ValueError):
            make_optimizer("lbfgs", 0.1)


class TestCheckpoint:
    def test_round_trip(self, tmp_path, theta, X):
        mlp_forward(X, theta)
        psi = init_sparsifier(6, 8, 0.3, 0.5, seed=3)
        config = TrainConfig(hidden=8, margin=float("inf"))
        save_checkpoint(tmp_path / "a.ckpt", theta, psi, config, {"epoch": 4})
        loaded, loaded_psi, loaded_config, meta = load_checkpoint(tmp_path / "a.ckpt")
        assert not loaded.training
        assert meta == {"epoch": 4}
        assert loaded_config == config
        np.testing.assert_array_equal(loaded_psi.embed_weight, psi.embed_weight)
        for name, p in theta.parameters().items():
            np.testing.assert_array_equal(loaded.parameters()[name], p)
        for name, b in theta.buffers().items():
            np.testing.assert_array_equal(loaded.buffers()[name], b)
        np.testing.assert_array_equal(predict_logits(X, loaded), predict_logits(X, theta))

    def test_wrong_format(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_text('{"format": "other"}')
        with pytest.raises(CheckpointError, match="expected format"):
            load_checkpoint(path)

    def test_unreadable(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "missing.ckpt")
