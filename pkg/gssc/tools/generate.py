"""
Synthetic SBM dataset generation tool
"""

import logging
from pathlib import Path

from ..config import PROVENANCE_FILE
from ..graph import dataset_fingerprint, expected_sbm_homophily, generate_sbm, homophily_ratio, save_graph
from ..utils.serialization import atomic_write_text, dumps

logger = logging.getLogger(__name__)


def gssc_generate(out: str, nodes: int = 1000, classes: int = 5, p_in: float = 0.02, p_out: float = 0.002,
                  dim: int = 64, feature_noise: float = 1.0, seed: int = 0,
                  train_per_class: int = 20, feature_offset: float = 0.0) -> str:
    """Generate an SBM graph and write it as a dataset directory with a provenance record"""

    logger.info(f"Generating SBM with {nodes} nodes and {classes} classes into {out}")
    graph = generate_sbm(
        nodes, classes, p_in, p_out, dim, feature_noise, seed, train_per_class=train_per_class, feature_offset=feature_offset,
    )
    save_graph(graph, out)

    summary = {
        'generator': 'sbm',
        'parameters': {
            'nodes': nodes,
            'classes': classes,
            'p_in': p_in,
            'p_out': p_out,
            'dim': dim,
            'feature_noise': feature_noise,
            'seed': seed,
            'train_per_class': train_per_class,
            'feature_offset': feature_offset,
        },
        'n_edges': graph.n_edges,
        'homophily': homophily_ratio(graph),
        'expected_homophily': expected_sbm_homophily(nodes, classes, p_in, p_out),
        'splits': {'train': len(graph.train), 'val': len(graph.val), 'test': len(graph.test)},
        'fingerprint': dataset_fingerprint(out),
    }
    atomic_write_text(Path(out) / PROVENANCE_FILE, dumps(summary) + "\n")
    return dumps({**summary, 'out': str(out)})
