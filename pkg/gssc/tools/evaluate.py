"""
Checkpoint tools: accuracy on a split, inference latency, and a dump of the learned subgraph
"""

import logging
from pathlib import Path

from ..graph import edge_homophily, load_graph
from ..nn.checkpoint import load_checkpoint
from ..sparsifier import dump_subgraph, sample_subgraph
from ..training import bench_latency, evaluate
from ..utils.serialization import dumps

logger = logging.getLogger(__name__)


def gssc_eval(ckpt: str, data: str, split: str = "test") -> str:
    """Accuracy of a checkpoint on one split, using features only"""

    theta, _, _, meta = load_checkpoint(ckpt)
    graph = load_graph(data)
    acc = evaluate(theta, graph, split)
    logger.info(f"{ckpt} on {split}: accuracy {acc:.4f}")
    return dumps({
        'checkpoint': str(ckpt),
        'split': split,
        'n_nodes': int(len(graph.split(split))),
        'accuracy': acc,
        'epoch': meta.get('epoch'),
    })


def gssc_bench(ckpt: str, data: str, repeats: int = 30, warmup: int = 3) -> str:
    """Full-graph inference latency of a checkpoint"""

    theta, _, _, _ = load_checkpoint(ckpt)
    graph = load_graph(data)
    report = bench_latency(theta, graph, repeats=repeats, warmup=warmup)
    return dumps({'checkpoint': str(ckpt), **report.as_dict()})


def gssc_sparsify(ckpt: str, data: str, out: str, seed: int = 0) -> str:
    """Draw one subgraph from the checkpoint's sparsifier and write it as sparsified.tsv"""

    _, psi, _, _ = load_checkpoint(ckpt)
    graph = load_graph(data)
    sub, _ = sample_subgraph(graph.features, graph.edges, psi, seed)
    out_path = Path(out)
    if out_path.suffix != ".tsv":
        out_path = out_path / "sparsified.tsv"
    dump_subgraph(sub, out_path)
    kept = sub.kept_edges
    return dumps({
        'out': str(out_path),
        'n_edges': graph.n_edges,
        'kept_edges': sub.n_kept,
        'homophily_before': edge_homophily(graph.edges, graph.labels),
        'homophily_after': edge_homophily(kept, graph.labels),
    })
