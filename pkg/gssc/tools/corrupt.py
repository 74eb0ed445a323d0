"""
Dataset corruption tool: label noise and edge perturbation
"""

import logging
from pathlib import Path
from typing import Optional

from ..config import PROVENANCE_FILE
from ..graph import dataset_fingerprint, homophily_ratio, inject_label_noise, load_graph, perturb_edges, save_graph
from ..utils.errors import NoiseSpecError
from ..utils.schemas import NoiseSpec
from ..utils.serialization import atomic_write_text, dumps

logger = logging.getLogger(__name__)

LABEL_NOISE_KINDS = {'sym': 'label-symmetric', 'asym': 'label-asymmetric'}


def gssc_corrupt(data: str, out: str, ratio: float, label_noise: Optional[str] = None,
                 edge_noise: bool = False, seed: int = 0, edge_noise_split: str = "half") -> str:
    """Write a corrupted copy of a dataset. The input directory is never touched."""

    if Path(out).resolve() == Path(data).resolve():
        raise NoiseSpecError("refusing to overwrite the input dataset; choose a different --out")
    if (label_noise is None) == (not edge_noise):
        raise NoiseSpecError("pass exactly one of --label-noise or --edge-noise")

    if edge_noise:
        spec = NoiseSpec(kind='edge-perturb', ratio=ratio, seed=seed, split=edge_noise_split)
    else:
        if label_noise not in LABEL_NOISE_KINDS:
            raise NoiseSpecError(f"unknown label noise {label_noise!r}, expected sym or asym")
        spec = NoiseSpec(kind=LABEL_NOISE_KINDS[label_noise], ratio=ratio, seed=seed)

    logger.info(f"Applying {spec.kind} noise r={spec.ratio} to {data}")
    graph = load_graph(data)
    corrupted = perturb_edges(graph, spec) if edge_noise else inject_label_noise(graph, spec)
    save_graph(corrupted, out)

    changed = int((corrupted.labels != graph.labels).sum())
    summary = {
        'source': str(data),
        'source_fingerprint': dataset_fingerprint(data),
        'noise': spec.model_dump(mode='json'),
        'n_edges': corrupted.n_edges,
        'labels_changed': changed,
        'homophily_before': homophily_ratio(graph),
        'homophily_after': homophily_ratio(corrupted),
        'fingerprint': dataset_fingerprint(out),
    }
    atomic_write_text(Path(out) / PROVENANCE_FILE, dumps(summary) + "\n")
    return dumps({**summary, 'out': str(out)})
