"""
Synthetic stochastic block model graphs with controllable homophily
"""

import logging

import numpy as np

from ..utils.rng import make_rng
from .core import Graph

logger = logging.getLogger(__name__)


def expected_sbm_homophily(n: int, n_classes: int, p_in: float, p_out: float) -> float:
    """Expected edge homophily of an equal-size SBM from pair counts"""
    size = n / n_classes
    intra = p_in * (size - 1)
    inter = p_out * n * (n_classes - 1) / n_classes
    if intra + inter == 0:
        return 0.0
    return intra / (intra + inter)


def _sample_blocks(rng: np.random.Generator, size: int, n_classes: int, p_in: float, p_out: float) -> np.ndarray:
    upper_r, upper_c = np.triu_indices(size, k=1)
    parts = []
    for a in range(n_classes):
        for b in range(a, n_classes):
            if a == b:
                keep = rng.random(len(upper_r)) < p_in
                src, dst = upper_r[keep], upper_c[keep]
            else:
                src, dst = np.nonzero(rng.random((size, size)) < p_out)
            parts.append(np.stack([a * size + src, b * size + dst], axis=1))
    return np.concatenate(parts, axis=0) if parts else np.zeros((0, 2), dtype=np.int64)


def _benchmark_splits(rng, labels, n_classes, train_per_class, n_val, n_test):
    train = []
    for c in range(n_classes):
        members = rng.permutation(np.flatnonzero(labels == c))
        train.append(members[:train_per_class])
    train = np.sort(np.concatenate(train))
    rest = rng.permutation(np.setdiff1d(np.arange(len(labels)), train))
    if n_val is None:
        n_val = min(500, len(rest) // 3)
    if n_test is None:
        n_test = min(1000, len(rest) - n_val)
    if n_val + n_test > len(rest):
        raise ValueError(f"cannot draw {n_val} val + {n_test} test nodes from {len(rest)} unlabeled nodes")
    return train, np.sort(rest[:n_val]), np.sort(rest[n_val:n_val + n_test])


def generate_sbm(
    n: int,
    n_classes: int,
    p_in: float,
    p_out: float,
    dim: int,
    feature_noise: float,
    seed: int,
    train_per_class: int = 20,
    n_val: int | None = None,
    n_test: int | None = None,
    feature_offset: float = 0.0,
) -> Graph:
    """Generate an SBM node-classification graph.

    Classes are equal-sized and contiguous (node v belongs to class
    v // (n / C)). Intra-class pairs connect with probability p_in and
    inter-class pairs with p_out. Node features are the class mean, one of
    C orthonormal directions in R^dim, plus Gaussian noise of scale
    `feature_noise`. A non-zero `feature_offset` shifts every node by that
    multiple of one shared random unit vector. Edges, features, the offset
    direction and splits each draw from their own stream derived from `seed`.
    """
    if n_classes < 1 or n % n_classes:
        raise ValueError(f"n={n} is not divisible by the number of classes {n_classes}")
    if not 0.0 <= p_out <= p_in <= 1.0:
        raise ValueError(f"need 0 <= p_out <= p_in <= 1, got p_in={p_in}, p_out={p_out}")
    if dim < n_classes:
        raise ValueError(f"dim={dim} is too small for {n_classes} orthogonal class means")
    if feature_noise < 0:
        raise ValueError(f"feature_noise must be non-negative, got {feature_noise}")
    size = n // n_classes
    if not 1 <= train_per_class <= size:
        raise ValueError(f"train_per_class={train_per_class} must lie in [1, {size}]")

    labels = np.repeat(np.arange(n_classes), size)
    edges = _sample_blocks(make_rng(seed, "sbm-edges"), size, n_classes, p_in, p_out)

    feature_rng = make_rng(seed, "sbm-features")
    means, _ = np.linalg.qr(feature_rng.standard_normal((dim, n_classes)))
    features = means.T[labels] + feature_noise * feature_rng.standard_normal((n, dim))
    if feature_offset:
        direction = make_rng(seed, "sbm-offset").standard_normal(dim)
        features = features + feature_offset * direction / np.linalg.norm(direction)

    train, val, test = _benchmark_splits(make_rng(seed, "sbm-splits"), labels, n_classes, train_per_class, n_val, n_test)
    graph = Graph(features, edges, labels, n_classes, train, val, test)
    logger.info(
        f"Generated SBM {graph} (expected homophily "
        f"{expected_sbm_homophily(n, n_classes, p_in, p_out):.4f})"
    )
    return graph
