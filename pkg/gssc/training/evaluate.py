"""
Structure-free evaluation and inference latency
"""

import logging
import time
from dataclasses import dataclass

import numpy as np

from ..graph.core import Graph
from ..nn.backbone import BackboneState, predict_logits

logger = logging.getLogger(__name__)


def accuracy(logits: np.ndarray, labels: np.ndarray, nodes: np.ndarray) -> float:
    """Share of `nodes` whose argmax logit equals the label; 0 for an empty node set"""
    if len(nodes) == 0:
        return 0.0
    return float(np.mean(np.argmax(logits[nodes], axis=1) == labels[nodes]))


def predict(theta: BackboneState, graph: Graph) -> np.ndarray:
    """Class predictions for every node. Only features are read, never edges."""
    return np.argmax(predict_logits(graph.features, theta), axis=1)


def evaluate(theta: BackboneState, graph: Graph, split: str = "test") -> float:
    nodes = graph.split(split)
    if len(nodes) == 0:
        raise ValueError(f"cannot evaluate on the empty {split} split")
    return accuracy(predict_logits(graph.features, theta), graph.labels, nodes)


@dataclass
class LatencyReport:
    mean_ms: float
    std_ms: float
    repeats: int
    n_nodes: int
    n_edges: int

    def as_dict(self) -> dict:
        return {
            "mean_ms": self.mean_ms,
            "std_ms": self.std_ms,
            "repeats": self.repeats,
            "n_nodes": self.n_nodes,
            "n_edges": self.n_edges,
        }


def bench_latency(theta: BackboneState, graph: Graph, repeats: int = 30, warmup: int = 3) -> LatencyReport:
    """Wall-clock time of full-graph inference, averaged over `repeats` timed passes.

    `warmup` untimed passes run first. The standard deviation is the
    population one, so a single repeat reports 0.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be at least 1, got {repeats}")
    for _ in range(warmup):
        predict_logits(graph.features, theta)
    timings = []
    for _ in range(repeats):
        start = time.perf_counter()
        predict_logits(graph.features, theta)
        timings.append((time.perf_counter() - start) * 1000.0)
    timings = np.asarray(timings)
    report = LatencyReport(float(timings.mean()), float(timings.std()), repeats, graph.n_nodes, graph.n_edges)
    logger.info(f"Inference over {graph.n_nodes} nodes: {report.mean_ms:.3f} ± {report.std_ms:.3f} ms ({repeats} runs)")
    return report
