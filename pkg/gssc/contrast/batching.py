"""
Edge mini-batches with degree-proportional negative nodes
"""

import logging
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from ..graph.core import edge_degrees
from ..sparsifier import SparsifiedSubgraph
from ..utils.errors import DegenerateSubgraphError

logger = logging.getLogger(__name__)

# Redraw rounds for negatives that hit an endpoint or a neighbor before giving up on exclusion
_EXCLUSION_ROUNDS = 8


@dataclass(frozen=True)
class EdgeBatch:
    """Edges (i, j) from E'_g, K negatives per edge, and each edge's row in the subgraph's edge list.

    `negative_mask` marks which negative slots are real; it is only set by
    enumerate mode, where rows have different numbers of non-neighbors.
    """

    edges: np.ndarray
    negatives: np.ndarray
    edge_ids: np.ndarray
    negative_mask: np.ndarray | None = None

    @property
    def size(self) -> int:
        return len(self.edges)

    @property
    def n_negatives(self) -> int:
        return self.negatives.shape[1]

    def nodes(self) -> np.ndarray:
        """Every node the batch touches: endpoints and negatives"""
        return np.unique(np.concatenate([self.edges.ravel(), self.negatives.ravel()]))

    def relabel(self, nodes: np.ndarray) -> "EdgeBatch":
        """Same batch with node ids replaced by positions in the sorted array `nodes`"""
        return replace(
            self,
            edges=np.searchsorted(nodes, self.edges),
            negatives=np.searchsorted(nodes, self.negatives),
        )


def negative_distribution(kept_edges: np.ndarray, n_nodes: int) -> np.ndarray:
    """P_k(v) ∝ degree of v in the sparsified edge set"""
    degrees = edge_degrees(kept_edges, n_nodes).astype(np.float64)
    total = degrees.sum()
    if total == 0:
        raise DegenerateSubgraphError("degenerate subgraph: no kept edges to draw negatives from")
    return degrees / total


def _directed_keys(kept_edges: np.ndarray, n_nodes: int) -> np.ndarray:
    src = np.concatenate([kept_edges[:, 0], kept_edges[:, 1]])
    dst = np.concatenate([kept_edges[:, 1], kept_edges[:, 0]])
    return np.sort(src * n_nodes + dst)


def draw_negatives(
    rng: np.random.Generator,
    dist: np.ndarray,
    edges: np.ndarray,
    n_negatives: int,
    neighbor_keys: np.ndarray | None = None,
) -> np.ndarray:
    """K draws per edge from `dist`, with replacement.

    With `neighbor_keys` (sorted directed keys i * n + k of E'_g), draws equal
    to either endpoint or adjacent to i are redrawn a few times; whatever is
    still invalid afterwards is kept, which only happens on tiny or dense
    graphs.
    """
    n = len(dist)
    negatives = rng.choice(n, size=(len(edges), n_negatives), p=dist)
    if neighbor_keys is None:
        return negatives
    src = edges[:, 0][:, None]
    dst = edges[:, 1][:, None]
    for _ in range(_EXCLUSION_ROUNDS):
        bad = (negatives == src) | (negatives == dst) | np.isin(src * n + negatives, neighbor_keys)
        if not bad.any():
            break
        negatives[bad] = rng.choice(n, size=int(bad.sum()), p=dist)
    return negatives


def iter_edge_batches(
    sub: SparsifiedSubgraph,
    n_nodes: int,
    batch_size: int,
    n_negatives: int,
    seed: int,
    exclude_neighbors: bool = False,
    include_dropped: bool = False,
) -> Iterator[EdgeBatch]:
    """One epoch: a random permutation of E'_g cut into batches of `batch_size`.

    Negatives always follow the degree law of E'_g. With `include_dropped`
    the permutation runs over every edge of the subgraph's edge list,
    including those the sample dropped.
    """
    kept = sub.kept_edges
    dist = negative_distribution(kept, n_nodes)
    neighbor_keys = _directed_keys(kept, n_nodes) if exclude_neighbors else None
    pool = np.arange(len(sub.edges)) if include_dropped else np.flatnonzero(sub.kept)
    rng = np.random.default_rng(seed)
    order = rng.permutation(pool)
    for start in range(0, len(order), batch_size):
        ids = order[start:start + batch_size]
        edges = sub.edges[ids]
        negatives = draw_negatives(rng, dist, edges, n_negatives, neighbor_keys)
        yield EdgeBatch(edges, negatives, ids)


def sample_edge_batch(
    sub: SparsifiedSubgraph,
    n_nodes: int,
    batch_size: int,
    n_negatives: int,
    seed: int,
    exclude_neighbors: bool = False,
) -> EdgeBatch:
    """B edges of E'_g uniformly without replacement (all of them if fewer), K negatives each"""
    if n_negatives < 1:
        raise ValueError(f"need at least one negative per edge, got {n_negatives}")
    if sub.n_kept == 0:
        raise DegenerateSubgraphError("degenerate subgraph: the sparsified edge set is empty")
    return next(iter_edge_batches(sub, n_nodes, batch_size, n_negatives, seed, exclude_neighbors))


def enumerate_edge_batch(sub: SparsifiedSubgraph, n_nodes: int) -> EdgeBatch:
    """Diagnostic batch: every kept edge, and as negatives every non-neighbor of i.

    Rows are padded to the longest negative list; `negative_mask` marks the
    real entries. Meant for graphs small enough to enumerate.
    """
    if sub.n_kept == 0:
        raise DegenerateSubgraphError("degenerate subgraph: the sparsified edge set is empty")
    kept_ids = np.flatnonzero(sub.kept)
    kept = sub.edges[kept_ids]
    adjacent = np.zeros((n_nodes, n_nodes), dtype=bool)
    adjacent[kept[:, 0], kept[:, 1]] = True
    adjacent[kept[:, 1], kept[:, 0]] = True
    np.fill_diagonal(adjacent, True)
    rows = [np.flatnonzero(~adjacent[i]) for i in kept[:, 0]]
    width = max(1, max(len(r) for r in rows))
    negatives = np.zeros((len(rows), width), dtype=np.int64)
    mask = np.zeros((len(rows), width), dtype=bool)
    for r, row in enumerate(rows):
        negatives[r, :len(row)] = row
        mask[r, :len(row)] = True
    return EdgeBatch(kept, negatives, kept_ids, mask)
