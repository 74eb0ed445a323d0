"""
Upper-level objectives over the sparsifier parameters ψ
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..config import DEGENERATE_EPS
from ..contrast.batching import iter_edge_batches
from ..contrast.losses import explicit_weight_loss, interpolate_augment
from ..nn.backbone import BackboneState, GradBundle, head_apply, mlp_forward
from ..sparsifier import (
    SparsifiedSubgraph,
    SparsifierState,
    relaxed_subgraph,
    sample_subgraph,
    sparsifier_backward,
)
from ..utils.errors import DegenerateSubgraphError

logger = logging.getLogger(__name__)


@dataclass
class ObjectiveValue:
    """Objective value and its derivative w.r.t. each edge's straight-through value"""

    value: float
    d_edge: np.ndarray


def pseudo_labels(Y: np.ndarray, labels: np.ndarray | None = None, known: np.ndarray | None = None) -> np.ndarray:
    """s_i = argmax y_i, optionally overridden by the true label on `known` nodes"""
    s = np.argmax(Y, axis=1)
    if labels is not None and known is not None:
        s[known] = labels[known]
    return s


def homophily_objective(sub: SparsifiedSubgraph, Y: np.ndarray, labels: np.ndarray | None = None) -> ObjectiveValue:
    """H = Σ g'_ij I(s_i = s_j) / Σ g'_ij over the original edge list.

    `labels` replaces the pseudo-labels argmax(Y) when given. The indicator
    is constant with respect to ψ, so ∂H/∂g'_e = (I_e - H) / Σ g'.
    """
    s = pseudo_labels(Y) if labels is None else np.asarray(labels)
    agree = (s[sub.edges[:, 0]] == s[sub.edges[:, 1]]).astype(np.float64)
    weights = sub.straight_through
    denominator = float(weights.sum())
    if denominator < DEGENERATE_EPS:
        raise DegenerateSubgraphError(f"degenerate subgraph: edge weight sum {denominator:.3g} is below {DEGENERATE_EPS}")
    value = float(weights @ agree) / denominator
    return ObjectiveValue(value, (agree - value) / denominator)


def relaxed_homophily(
    X: np.ndarray,
    edges: np.ndarray,
    psi: SparsifierState,
    noise: np.ndarray,
    labels: np.ndarray,
) -> tuple[float, GradBundle]:
    """H on the soft relaxation of a frozen Gumbel draw, with its gradient over ψ"""
    sub, probs = sample_subgraph(X, edges, psi, seed=0, noise=noise)
    objective = homophily_objective(relaxed_subgraph(sub), None, labels)
    return objective.value, sparsifier_backward(X, psi, probs, sub, objective.d_edge)


def explicit_weight_objective(
    X: np.ndarray,
    sub: SparsifiedSubgraph,
    theta: BackboneState,
    n_nodes: int,
    batch_size: int,
    n_negatives: int,
    margin: float,
    seed: int,
    use_negatives: bool = True,
    fixed_beta: float | None = None,
) -> ObjectiveValue:
    """Edge-weighted smoothness loss over every original edge, sampled-out ones included.

    θ is held fixed: the backbone runs in eval mode over all nodes once, and
    each batch reuses those representations. The value is the mean of the
    per-batch losses.
    """
    H, _ = mlp_forward(X, theta.copy().eval(), update_running=False)
    Y, Z = head_apply(H, theta)
    d_edge = np.zeros(len(sub.edges))
    total, n_batches = 0.0, 0
    for batch in iter_edge_batches(sub, n_nodes, batch_size, n_negatives, seed, include_dropped=True):
        i, j = batch.edges[:, 0], batch.edges[:, 1]
        aug_ij, _, _ = interpolate_augment(H[i], H[j], theta, fixed_beta)
        aug_ji, _, _ = interpolate_augment(H[j], H[i], theta, fixed_beta)
        result = explicit_weight_loss(batch, sub, Y, Z, aug_ij, aug_ji, margin, use_negatives)
        np.add.at(d_edge, batch.edge_ids, result.d_weights)
        total += result.value
        n_batches += 1
    return ObjectiveValue(total / n_batches, d_edge / n_batches)

