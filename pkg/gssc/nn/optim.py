"""
Gradient-based update rules over named parameter dictionaries
"""

import numpy as np

from .backbone import GradBundle


class Optimizer:
    """Descends on the gradients it is given. Callers maximizing an objective pass the negated gradient."""

    def __init__(self, lr: float, weight_decay: float = 0.0):
        self.lr = lr
        self.weight_decay = weight_decay

    def _decayed(self, params: dict[str, np.ndarray], grads: GradBundle) -> GradBundle:
        if not self.weight_decay:
            return grads
        return {name: g + self.weight_decay * params[name] for name, g in grads.items()}

    def compute_update(self, params: dict[str, np.ndarray], grads: GradBundle) -> GradBundle:
        raise NotImplementedError

    def step(self, params: dict[str, np.ndarray], grads: GradBundle) -> GradBundle:
        """Update `params` in place and return the applied deltas"""
        update = self.compute_update(params, grads)
        for name, delta in update.items():
            params[name] += delta
        return update


class SGD(Optimizer):
    def compute_update(self, params, grads):
        grads = self._decayed(params, grads)
        return {name: -self.lr * g for name, g in grads.items()}


class Adam(Optimizer):
    def __init__(self, lr: float, weight_decay: float = 0.0, betas=(0.9, 0.999), eps: float = 1e-8):
        super().__init__(lr, weight_decay)
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def compute_update(self, params, grads):
        grads = self._decayed(params, grads)
        self.t += 1
        update = {}
        for name, g in grads.items():
            m = self.m.get(name, np.zeros_like(g))
            v = self.v.get(name, np.zeros_like(g))
            m = self.beta1 * m + (1 - self.beta1) * g
            v = self.beta2 * v + (1 - self.beta2) * g * g
            self.m[name], self.v[name] = m, v
            m_hat = m / (1 - self.beta1 ** self.t)
            v_hat = v / (1 - self.beta2 ** self.t)
            update[name] = -self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return update


def make_optimizer(name: str, lr: float, weight_decay: float = 0.0) -> Optimizer:
    if name == "adam":
        return Adam(lr, weight_decay)
    if name == "sgd":
        return SGD(lr, weight_decay)
    raise ValueError(f"unknown optimizer {name!r}")
