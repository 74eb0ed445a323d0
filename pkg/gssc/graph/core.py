"""
Immutable attributed graph with a symmetric CSR adjacency and train/val/test splits
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from ..utils.errors import GraphInvariantError

SPLITS = ("train", "val", "test")


def _frozen(array, dtype) -> np.ndarray:
    array = np.array(array, dtype=dtype, copy=True)
    array.flags.writeable = False
    return array


def canonical_edges(edges, n_nodes: int) -> np.ndarray:
    """Validate an undirected edge list and return it as sorted (src < dst) rows.

    Raises GraphInvariantError on self-loops, out-of-range endpoints or an
    edge listed twice (in either orientation).
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(edges) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if edges.min() < 0 or edges.max() >= n_nodes:
        bad = np.flatnonzero((edges < 0).any(axis=1) | (edges >= n_nodes).any(axis=1))[0]
        raise GraphInvariantError(f"edge {bad} endpoint out of range [0, {n_nodes})")
    loops = np.flatnonzero(edges[:, 0] == edges[:, 1])
    if len(loops):
        raise GraphInvariantError(f"self-loop at edge {loops[0]} (node {edges[loops[0], 0]})")
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    keys = lo * n_nodes + hi
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    dup = np.flatnonzero(sorted_keys[1:] == sorted_keys[:-1])
    if len(dup):
        first = order[dup[0] + 1]
        raise GraphInvariantError(f"duplicate edge ({lo[first]}, {hi[first]}) at edge {first}")
    return np.stack([lo[order], hi[order]], axis=1)


@dataclass(frozen=True, eq=False)
class Graph:
    """Node features, labels, undirected edges and splits.

    `edges` holds every undirected edge once, as (src, dst) with src < dst,
    sorted lexicographically; this order is the canonical edge index used by
    the sparsifier. `adjacency` is the symmetric CSR view of the same edges.
    Arrays are read-only, so a Graph can be shared freely.
    """

    features: np.ndarray
    edges: np.ndarray
    labels: np.ndarray
    n_classes: int
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    adjacency: sparse.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        features = _frozen(self.features, np.float64)
        if features.ndim != 2:
            raise GraphInvariantError(f"features must be a matrix, got shape {features.shape}")
        n = features.shape[0]
        if not np.all(np.isfinite(features)):
            raise GraphInvariantError("features contain non-finite values")
        labels = _frozen(self.labels, np.int64)
        if labels.shape != (n,):
            raise GraphInvariantError(f"expected {n} labels, got shape {labels.shape}")
        if self.n_classes < 1:
            raise GraphInvariantError(f"n_classes must be positive, got {self.n_classes}")
        if n and (labels.min() < 0 or labels.max() >= self.n_classes):
            bad = int(np.flatnonzero((labels < 0) | (labels >= self.n_classes))[0])
            raise GraphInvariantError(f"label {labels[bad]} of node {bad} outside [0, {self.n_classes})")
        edges = _frozen(canonical_edges(self.edges, n), np.int64)
        seen = np.zeros(n, dtype=bool)
        splits = {}
        for name in SPLITS:
            ids = np.sort(np.asarray(getattr(self, name), dtype=np.int64).reshape(-1))
            if len(ids) and (ids[0] < 0 or ids[-1] >= n):
                raise GraphInvariantError(f"{name} split references a node outside [0, {n})")
            if len(np.unique(ids)) != len(ids):
                raise GraphInvariantError(f"{name} split lists a node twice")
            if seen[ids].any():
                raise GraphInvariantError(f"{name} split overlaps an earlier split")
            seen[ids] = True
            splits[name] = _frozen(ids, np.int64)

        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "edges", edges)
        for name, ids in splits.items():
            object.__setattr__(self, name, ids)
        object.__setattr__(self, "n_classes", int(self.n_classes))
        object.__setattr__(self, "adjacency", _symmetric_csr(edges, n))

    @property
    def n_nodes(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    def split(self, name: str) -> np.ndarray:
        if name not in SPLITS:
            raise ValueError(f"unknown split {name!r}, expected one of {SPLITS}")
        return getattr(self, name)

    def with_edges(self, edges) -> "Graph":
        return Graph(self.features, edges, self.labels, self.n_classes, self.train, self.val, self.test)

    def with_labels(self, labels) -> "Graph":
        return Graph(self.features, self.edges, labels, self.n_classes, self.train, self.val, self.test)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n_classes == other.n_classes
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.labels, other.labels)
            and all(np.array_equal(self.split(s), other.split(s)) for s in SPLITS)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return (
            f"Graph(n_nodes={self.n_nodes}, n_features={self.n_features}, n_edges={self.n_edges}, "
            f"n_classes={self.n_classes}, train={len(self.train)}, val={len(self.val)}, test={len(self.test)})"
        )


def _symmetric_csr(edges: np.ndarray, n: int) -> sparse.csr_matrix:
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    data = np.ones(len(rows), dtype=np.float64)
    adjacency = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
    adjacency.sort_indices()
    return adjacency


def edge_degrees(edges: np.ndarray, n_nodes: int) -> np.ndarray:
    """Node degrees of an undirected edge list"""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return np.bincount(edges.ravel(), minlength=n_nodes)


def edge_keys(edges: np.ndarray, n_nodes: int) -> np.ndarray:
    """Integer key src * n + dst for each (src < dst) row"""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return edges[:, 0] * n_nodes + edges[:, 1]
