"""
Label and structure corruption protocols
"""

import logging
import math

import numpy as np

from ..utils.errors import NoiseSpecError
from ..utils.rng import make_rng
from ..utils.schemas import NoiseSpec
from .core import Graph, edge_keys

logger = logging.getLogger(__name__)

LABEL_KINDS = ("label-symmetric", "label-asymmetric")

# Below this many node pairs, non-edges are enumerated instead of rejection-sampled
_ENUMERATE_PAIRS = 5_000_000


def inject_label_noise(graph: Graph, spec: NoiseSpec) -> Graph:
    """Corrupt training labels only.

    Symmetric: each training label moves with probability r to a uniformly
    chosen other class (r / (C - 1) per class). Asymmetric: label i moves
    with probability r to (i + 1) mod C.
    """
    if spec.kind not in LABEL_KINDS:
        raise NoiseSpecError(f"inject_label_noise needs a label noise kind, got {spec.kind!r}")
    C = graph.n_classes
    rng = make_rng(spec.seed, spec.kind)
    train = graph.train
    flip = rng.random(len(train)) < spec.ratio
    shift = rng.integers(1, C, size=len(train)) if C > 1 else np.zeros(len(train), dtype=np.int64)
    if C == 1 and flip.any():
        logger.warning("single-class graph, label noise has no other class to flip to")
        flip[:] = False

    old = graph.labels[train]
    if spec.kind == "label-symmetric":
        new = (old + shift) % C
    else:
        new = (old + 1) % C
    labels = graph.labels.copy()
    labels[train] = np.where(flip, new, old)
    logger.info(f"{spec.kind} noise r={spec.ratio}: flipped {int(flip.sum())}/{len(train)} training labels")
    return graph.with_labels(labels)


def _sample_non_edges(rng: np.random.Generator, n: int, existing: np.ndarray, count: int) -> np.ndarray:
    """`count` distinct uniformly chosen unordered non-adjacent pairs, as keys"""
    if count == 0:
        return np.zeros(0, dtype=np.int64)
    if n * (n - 1) // 2 <= _ENUMERATE_PAIRS:
        iu, ju = np.triu_indices(n, k=1)
        candidates = np.setdiff1d(iu.astype(np.int64) * n + ju, existing, assume_unique=True)
        return rng.choice(candidates, size=count, replace=False)
    picked = np.zeros(0, dtype=np.int64)
    while len(picked) < count:
        need = count - len(picked)
        i = rng.integers(0, n, size=2 * need + 16)
        j = rng.integers(0, n, size=2 * need + 16)
        keep = i != j
        keys = np.minimum(i, j)[keep] * n + np.maximum(i, j)[keep]
        keys = keys[~np.isin(keys, existing)]
        keys = keys[~np.isin(keys, picked)]
        _, first = np.unique(keys, return_index=True)
        picked = np.concatenate([picked, keys[np.sort(first)]])
    return picked[:count]


def perturb_edges(graph: Graph, spec: NoiseSpec) -> Graph:
    """Remove existing edges and add the same number of non-edges.

    With split "half" the budget r|E| is shared: floor(r|E|/2) removals and
    as many additions. With split "each" there are floor(r|E|) of both.
    Added pairs are drawn uniformly from the original graph's non-edges.
    """
    if spec.kind != "edge-perturb":
        raise NoiseSpecError(f"perturb_edges needs kind 'edge-perturb', got {spec.kind!r}")
    n, m = graph.n_nodes, graph.n_edges
    budget = spec.ratio * m / 2 if spec.split == "half" else spec.ratio * m
    count = min(int(math.floor(budget + 1e-9)), m)
    available = n * (n - 1) // 2 - m
    if count > available:
        raise NoiseSpecError(f"graph too dense: cannot add {count} edges, only {available} non-edges exist")

    rng = make_rng(spec.seed, "edge-perturb")
    removed = rng.choice(m, size=count, replace=False)
    kept = np.delete(graph.edges, removed, axis=0)
    existing = np.sort(edge_keys(graph.edges, n))
    added_keys = _sample_non_edges(rng, n, existing, count)
    added = np.stack([added_keys // n, added_keys % n], axis=1)
    logger.info(f"edge perturbation r={spec.ratio} ({spec.split}): removed {count}, added {count}")
    return graph.with_edges(np.concatenate([kept, added], axis=0))


def remove_edges_by_class(graph: Graph, fraction: float, which: str, seed: int, labels=None) -> Graph:
    """Drop a random `fraction` of the intra-class, inter-class or ('any') all edges"""
    if which not in ("intra", "inter", "any"):
        raise ValueError(f"which must be 'intra', 'inter' or 'any', got {which!r}")
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    labels = graph.labels if labels is None else np.asarray(labels)
    same = labels[graph.edges[:, 0]] == labels[graph.edges[:, 1]]
    if which == "any":
        pool = np.arange(graph.n_edges)
    else:
        pool = np.flatnonzero(same if which == "intra" else ~same)
    rng = make_rng(seed, "remove", which)
    drop = rng.choice(pool, size=int(round(fraction * len(pool))), replace=False)
    return graph.with_edges(np.delete(graph.edges, drop, axis=0))
