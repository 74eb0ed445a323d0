"""
Edge homophily: the share of edges whose endpoints carry the same label
"""

import logging

import numpy as np

from .core import Graph

logger = logging.getLogger(__name__)


def edge_homophily(edges: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of undirected edges (one row each) joining same-label endpoints.

    An empty edge set has ratio 0; this is logged as a warning rather than
    raised, since heavily sparsified subgraphs can legitimately get there.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(edges) == 0:
        logger.warning("homophily of an empty edge set requested, returning 0")
        return 0.0
    labels = np.asarray(labels)
    return float(np.mean(labels[edges[:, 0]] == labels[edges[:, 1]]))


def homophily_ratio(graph: Graph, labels=None) -> float:
    """Homophily of `graph` under `labels` (the graph's own labels by default)"""
    labels = graph.labels if labels is None else np.asarray(labels)
    if labels.shape != (graph.n_nodes,):
        raise ValueError(f"expected {graph.n_nodes} labels, got shape {labels.shape}")
    return edge_homophily(graph.edges, labels)
