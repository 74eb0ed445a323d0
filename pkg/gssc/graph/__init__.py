"""
Graph data model, dataset format, synthetic generation and corruption
"""

from .core import Graph, SPLITS, canonical_edges, edge_degrees, edge_keys
from .io import load_graph, save_graph, dataset_fingerprint, DATASET_FILES
from .generate import generate_sbm, expected_sbm_homophily
from .homophily import homophily_ratio, edge_homophily
from .noise import inject_label_noise, perturb_edges, remove_edges_by_class

__all__ = [
    'Graph',
    'SPLITS',
    'canonical_edges',
    'edge_degrees',
    'edge_keys',
    'load_graph',
    'save_graph',
    'dataset_fingerprint',
    'DATASET_FILES',
    'generate_sbm',
    'expected_sbm_homophily',
    'homophily_ratio',
    'edge_homophily',
    'inject_label_noise',
    'perturb_edges',
    'remove_edges_by_class',
]
