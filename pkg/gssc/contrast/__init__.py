"""
Edge batching and the structural self-contrasting losses
"""

from .batching import (
    EdgeBatch,
    negative_distribution,
    draw_negatives,
    iter_edge_batches,
    sample_edge_batch,
    enumerate_edge_batch,
)
from .losses import (
    LossReport,
    discrepancy,
    interpolate_augment,
    interpolate_backward,
    smoothness_loss,
    classification_loss,
    explicit_weight_loss,
    total_loss,
    logsumexp_smoothness,
)

__all__ = [
    'EdgeBatch',
    'negative_distribution',
    'draw_negatives',
    'iter_edge_batches',
    'sample_edge_batch',
    'enumerate_edge_batch',
    'LossReport',
    'discrepancy',
    'interpolate_augment',
    'interpolate_backward',
    'smoothness_loss',
    'classification_loss',
    'explicit_weight_loss',
    'total_loss',
    'logsumexp_smoothness',
]
