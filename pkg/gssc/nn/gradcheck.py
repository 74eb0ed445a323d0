"""
Central finite-difference verification of analytic gradients
"""

import logging
from typing import Callable

import numpy as np

from ..utils.errors import GradCheckError

logger = logging.getLogger(__name__)

Objective = Callable[[dict], tuple[float, dict]]


def _relative_error(analytic: float, numeric: float, atol: float) -> float:
    if abs(analytic - numeric) <= atol:
        return 0.0
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)


def grad_check(
    f: Objective,
    params: dict[str, np.ndarray],
    eps: float = 1e-6,
    max_coords: int = 64,
    probes: int = 8,
    atol: float = 1e-8,
    seed: int = 0,
) -> float:
    """Worst relative error between f's analytic gradient and central differences.

    `f(params)` returns (value, grads) with grads keyed like `params`. Tensors
    with at most `max_coords` entries are checked coordinate by coordinate;
    larger tensors along `probes` random unit directions. A coordinate whose
    analytic and numeric values differ by at most `atol` counts as exact.
    `params` is never modified.
    """
    if not 1e-7 <= eps <= 1e-3:
        raise ValueError(f"eps must lie in [1e-7, 1e-3], got {eps}")
    base = {name: np.array(p, dtype=np.float64, copy=True) for name, p in params.items()}
    value, grads = f({name: p.copy() for name, p in base.items()})
    again, _ = f({name: p.copy() for name, p in base.items()})
    if value != again:
        raise GradCheckError(f"objective is not deterministic: {value!r} != {again!r}")

    def evaluate(name: str, direction: np.ndarray) -> float:
        shifted_up = {k: v.copy() for k, v in base.items()}
        shifted_up[name] = base[name] + eps * direction
        shifted_down = {k: v.copy() for k, v in base.items()}
        shifted_down[name] = base[name] - eps * direction
        return (f(shifted_up)[0] - f(shifted_down)[0]) / (2 * eps)

    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, p in base.items():
        analytic = np.asarray(grads.get(name, np.zeros_like(p)), dtype=np.float64)
        if analytic.shape != p.shape:
            raise ValueError(f"gradient for {name} has shape {analytic.shape}, parameter has {p.shape}")
        if p.size <= max_coords:
            for idx in np.ndindex(p.shape):
                direction = np.zeros_like(p)
                direction[idx] = 1.0
                err = _relative_error(float(analytic[idx]), evaluate(name, direction), atol)
                worst = max(worst, err)
        else:
            for _ in range(probes):
                direction = rng.standard_normal(p.shape)
                direction /= np.linalg.norm(direction)
                err = _relative_error(float(np.sum(analytic * direction)), evaluate(name, direction), atol)
                worst = max(worst, err)
    logger.debug(f"grad_check over {len(base)} tensors: worst relative error {worst:.3e}")
    return worst
