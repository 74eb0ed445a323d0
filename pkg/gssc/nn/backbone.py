"""
MLP backbone and prediction heads with hand-derived reverse-mode gradients.

Each hidden layer computes Dropout(BN(ReLU(H W))) in that order. Forward
functions return a cache; the matching backward function consumes it and
returns a GradBundle keyed like BackboneState.parameters().
"""

from dataclasses import dataclass, field, replace

import numpy as np

from ..config import BN_EPS, BN_MOMENTUM
from ..utils.errors import NonFiniteError, ShapeError

GradBundle = dict[str, np.ndarray]


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


@dataclass
class BackboneState:
    """Parameters θ: layer weights, batch-norm affine terms, heads f_ω, g_γ and interpolation vector a"""

    weights: list[np.ndarray]
    bn_scale: list[np.ndarray]
    bn_shift: list[np.ndarray]
    running_mean: list[np.ndarray]
    running_var: list[np.ndarray]
    head_f: np.ndarray
    head_g: np.ndarray
    interp_weight: np.ndarray
    dropout_rate: float = 0.0
    training: bool = True

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def hidden(self) -> int:
        return self.weights[0].shape[1]

    @property
    def n_classes(self) -> int:
        return self.head_f.shape[1]

    def parameters(self) -> dict[str, np.ndarray]:
        """Trainable tensors by name. The arrays are the live ones, not copies."""
        params = {}
        for l in range(self.n_layers):
            params[f"layers.{l}.weight"] = self.weights[l]
            params[f"layers.{l}.bn_scale"] = self.bn_scale[l]
            params[f"layers.{l}.bn_shift"] = self.bn_shift[l]
        params["head_f"] = self.head_f
        params["head_g"] = self.head_g
        params["interp_weight"] = self.interp_weight
        return params

    def buffers(self) -> dict[str, np.ndarray]:
        buffers = {}
        for l in range(self.n_layers):
            buffers[f"layers.{l}.running_mean"] = self.running_mean[l]
            buffers[f"layers.{l}.running_var"] = self.running_var[l]
        return buffers

    def copy(self) -> "BackboneState":
        return replace(
            self,
            weights=[w.copy() for w in self.weights],
            bn_scale=[s.copy() for s in self.bn_scale],
            bn_shift=[s.copy() for s in self.bn_shift],
            running_mean=[m.copy() for m in self.running_mean],
            running_var=[v.copy() for v in self.running_var],
            head_f=self.head_f.copy(),
            head_g=self.head_g.copy(),
            interp_weight=self.interp_weight.copy(),
        )

    def with_parameters(self, params: dict[str, np.ndarray]) -> "BackboneState":
        """A copy with the named tensors replaced; names follow parameters()"""
        state = self.copy()
        for name, value in params.items():
            value = np.array(value, dtype=np.float64, copy=True)
            if name.startswith("layers."):
                _, l, kind = name.split(".")
                getattr(state, {"weight": "weights"}.get(kind, kind))[int(l)] = value
            else:
                setattr(state, name, value)
        return state

    def eval(self) -> "BackboneState":
        self.training = False
        return self

    def train(self) -> "BackboneState":
        self.training = True
        return self


def init_backbone(in_dim: int, hidden: int, n_classes: int, layers: int, dropout: float, seed: int) -> BackboneState:
    rng = np.random.default_rng(seed)
    weights = [glorot_uniform(rng, in_dim, hidden)]
    weights += [glorot_uniform(rng, hidden, hidden) for _ in range(layers - 1)]
    return BackboneState(
        weights=weights,
        bn_scale=[np.ones(hidden) for _ in range(layers)],
        bn_shift=[np.zeros(hidden) for _ in range(layers)],
        running_mean=[np.zeros(hidden) for _ in range(layers)],
        running_var=[np.ones(hidden) for _ in range(layers)],
        head_f=glorot_uniform(rng, hidden, n_classes),
        head_g=glorot_uniform(rng, hidden, n_classes),
        interp_weight=np.zeros(2 * hidden),
        dropout_rate=dropout,
    )


@dataclass
class LayerCache:
    inputs: np.ndarray
    pre_activation: np.ndarray
    normalized: np.ndarray
    inv_std: np.ndarray
    batch_stats: bool
    dropout_scale: np.ndarray | None = None


@dataclass
class ForwardCache:
    layers: list[LayerCache] = field(default_factory=list)


def mlp_forward(X: np.ndarray, state: BackboneState, seed: int = 0, update_running: bool = True):
    """Run the MLP over the rows of X. Returns (H, cache).

    In training mode batch-norm normalizes with the statistics of these rows
    (and folds them into the running statistics when `update_running`) and
    dropout draws its mask from `seed`. In eval mode both are deterministic
    and the output is a pure function of (X, state).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != state.in_dim:
        raise ShapeError(f"expected input with {state.in_dim} columns, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteError("mlp_forward input contains non-finite values")

    rate = state.dropout_rate
    rng = np.random.default_rng(seed) if state.training and rate > 0 else None
    cache = ForwardCache()
    H = X
    for l in range(state.n_layers):
        Z = H @ state.weights[l]
        A = np.maximum(Z, 0.0)
        if state.training:
            mean = A.mean(axis=0)
            var = A.var(axis=0)
            if update_running:
                n = A.shape[0]
                unbiased = var * n / (n - 1) if n > 1 else var
                state.running_mean[l] = (1 - BN_MOMENTUM) * state.running_mean[l] + BN_MOMENTUM * mean
                state.running_var[l] = np.maximum(
                    (1 - BN_MOMENTUM) * state.running_var[l] + BN_MOMENTUM * unbiased, BN_EPS
                )
        else:
            mean, var = state.running_mean[l], state.running_var[l]
        inv_std = 1.0 / np.sqrt(var + BN_EPS)
        normalized = (A - mean) * inv_std
        out = normalized * state.bn_scale[l] + state.bn_shift[l]
        scale = None
        if rng is not None:
            scale = (rng.random(out.shape) >= rate) / (1.0 - rate)
            out = out * scale
        cache.layers.append(LayerCache(H, Z, normalized, inv_std, state.training, scale))
        H = out
    return H, cache


def mlp_backward(dH: np.ndarray, state: BackboneState, cache: ForwardCache) -> GradBundle:
    grads: GradBundle = {}
    for l in reversed(range(state.n_layers)):
        layer = cache.layers[l]
        if layer.dropout_scale is not None:
            dH = dH * layer.dropout_scale
        grads[f"layers.{l}.bn_scale"] = (dH * layer.normalized).sum(axis=0)
        grads[f"layers.{l}.bn_shift"] = dH.sum(axis=0)
        dnorm = dH * state.bn_scale[l]
        if layer.batch_stats:
            n = dnorm.shape[0]
            dA = layer.inv_std / n * (
                n * dnorm - dnorm.sum(axis=0) - layer.normalized * (dnorm * layer.normalized).sum(axis=0)
            )
        else:
            dA = dnorm * layer.inv_std
        dZ = dA * (layer.pre_activation > 0)
        grads[f"layers.{l}.weight"] = layer.inputs.T @ dZ
        dH = dZ @ state.weights[l].T
    return grads


def head_apply(H: np.ndarray, state: BackboneState):
    """Two independent linear heads: Y = H ω (f_ω) and Z = H γ (g_γ)"""
    if H.ndim != 2 or H.shape[1] != state.hidden:
        raise ShapeError(f"expected hidden representations with {state.hidden} columns, got shape {H.shape}")
    return H @ state.head_f, H @ state.head_g


def head_backward(H: np.ndarray, dY: np.ndarray, dZ: np.ndarray, state: BackboneState):
    """Returns (grads for head_f/head_g, dL/dH)"""
    grads = {"head_f": H.T @ dY, "head_g": H.T @ dZ}
    dH = dY @ state.head_f.T + dZ @ state.head_g.T
    return grads, dH


def predict_logits(X: np.ndarray, state: BackboneState) -> np.ndarray:
    """Structure-free inference: eval-mode MLP followed by f_ω"""
    training = state.training
    state.training = False
    try:
        H, _ = mlp_forward(X, state, update_running=False)
    finally:
        state.training = training
    return H @ state.head_f


def zero_grads(state: BackboneState) -> GradBundle:
    return {name: np.zeros_like(p) for name, p in state.parameters().items()}


def accumulate(total: GradBundle, grads: GradBundle) -> GradBundle:
    for name, g in grads.items():
        total[name] = total[name] + g if name in total else g.copy()
    return total
