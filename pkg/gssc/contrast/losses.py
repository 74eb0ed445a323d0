"""
Structural self-contrasting losses and their gradients.

The discriminator D is the mean squared error over the C logits. For an edge
(i, j) the smoothness term is

    D(y_i, g_i→j) + D(y_j, g_j→i) - mean_k [min(D(y_i, z_k), m) + min(D(y_j, z_k), m)]

where g_i→j = g_γ(β h_j + (1 - β) h_i) is the interpolated neighbor and z_k
are the g_γ outputs of the negatives. The batch value is the mean over edges.

The array-level functions take Y, Z and labels indexed by the same node ids
as the batch (global ids, or local ids after EdgeBatch.relabel) and return
gradients with respect to their array arguments. `total_loss` runs the whole
forward and backward pass for one batch and returns a GradBundle over θ.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit, log_softmax, logsumexp, softmax

from ..nn.backbone import (
    BackboneState,
    GradBundle,
    accumulate,
    head_apply,
    head_backward,
    mlp_backward,
    mlp_forward,
)
from ..sparsifier import SparsifiedSubgraph
from ..utils.errors import ShapeError
from .batching import EdgeBatch

logger = logging.getLogger(__name__)


def discrepancy(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Mean squared error over the last axis"""
    return np.mean((u - v) ** 2, axis=-1)


@dataclass
class LossReport:
    smooth: float
    cla: float
    unlabeled: bool = False

    @property
    def total(self) -> float:
        return self.smooth + self.cla

    def as_dict(self) -> dict:
        return {"smooth": self.smooth, "cla": self.cla, "total": self.total}


@dataclass
class AugmentCache:
    h_i: np.ndarray
    h_j: np.ndarray
    mixed: np.ndarray
    beta: np.ndarray
    learned: bool


def interpolate_augment(h_i: np.ndarray, h_j: np.ndarray, theta: BackboneState, fixed_beta: float | None = None):
    """g_i→j = g_γ(β h_j + (1 - β) h_i) with β = σ(a · [h_i ‖ h_j] / √(2F)).

    Works row-wise on (B, F) arrays. `fixed_beta` replaces the learned
    coefficient by a constant. Returns (g, β, cache).
    """
    if h_i.shape != h_j.shape or h_i.shape[-1] != theta.hidden:
        raise ShapeError(f"cannot interpolate shapes {h_i.shape} and {h_j.shape} with hidden size {theta.hidden}")
    F = theta.hidden
    if fixed_beta is None:
        beta = expit((h_i @ theta.interp_weight[:F] + h_j @ theta.interp_weight[F:]) / np.sqrt(2 * F))
    else:
        beta = np.full(h_i.shape[:-1], float(fixed_beta))
    mixed = beta[..., None] * h_j + (1.0 - beta[..., None]) * h_i
    return mixed @ theta.head_g, beta, AugmentCache(h_i, h_j, mixed, beta, fixed_beta is None)


def interpolate_backward(d_aug: np.ndarray, cache: AugmentCache, theta: BackboneState):
    """Returns (grads for head_g and interp_weight, dL/dh_i, dL/dh_j)"""
    F = theta.hidden
    d_mixed = d_aug @ theta.head_g.T
    grads = {"head_g": cache.mixed.T @ d_aug}
    beta = cache.beta[:, None]
    dh_i = (1.0 - beta) * d_mixed
    dh_j = beta * d_mixed
    if cache.learned:
        d_beta = np.sum(d_mixed * (cache.h_j - cache.h_i), axis=1)
        d_logit = d_beta * cache.beta * (1.0 - cache.beta) / np.sqrt(2 * F)
        grads["interp_weight"] = np.concatenate([cache.h_i.T @ d_logit, cache.h_j.T @ d_logit])
        dh_i = dh_i + d_logit[:, None] * theta.interp_weight[:F]
        dh_j = dh_j + d_logit[:, None] * theta.interp_weight[F:]
    else:
        grads["interp_weight"] = np.zeros_like(theta.interp_weight)
    return grads, dh_i, dh_j


@dataclass
class SmoothnessResult:
    value: float
    terms: np.ndarray
    dY: np.ndarray
    dZ: np.ndarray
    d_aug_ij: np.ndarray
    d_aug_ji: np.ndarray
    d_weights: np.ndarray | None = None


def smoothness_loss(
    batch: EdgeBatch,
    Y: np.ndarray,
    Z: np.ndarray,
    aug_ij: np.ndarray,
    aug_ji: np.ndarray,
    margin: float = 10.0,
    use_negatives: bool = True,
    weights: np.ndarray | None = None,
) -> SmoothnessResult:
    """Mean over batch edges of the (optionally weighted) smoothness term"""
    B = batch.size
    if B == 0:
        raise ValueError("smoothness_loss needs a non-empty batch")
    C = Y.shape[1]
    i, j = batch.edges[:, 0], batch.edges[:, 1]
    y_i, y_j = Y[i], Y[j]
    terms = discrepancy(y_i, aug_ij) + discrepancy(y_j, aug_ji)

    if use_negatives:
        z_k = Z[batch.negatives]
        d_ik = discrepancy(y_i[:, None, :], z_k)
        d_jk = discrepancy(y_j[:, None, :], z_k)
        mask = np.ones(d_ik.shape, dtype=bool) if batch.negative_mask is None else batch.negative_mask
        counts = mask.sum(axis=1)
        share = np.where(mask, 1.0 / np.maximum(counts, 1)[:, None], 0.0)
        terms = terms - np.sum(share * (np.minimum(d_ik, margin) + np.minimum(d_jk, margin)), axis=1)

    w = np.ones(B) if weights is None else np.asarray(weights, dtype=np.float64)
    value = float(np.sum(w * terms) / B)
    scale = (w / B)[:, None]

    dY = np.zeros_like(Y)
    dZ = np.zeros_like(Z)
    d_aug_ij = -scale * 2.0 * (y_i - aug_ij) / C
    d_aug_ji = -scale * 2.0 * (y_j - aug_ji) / C
    np.add.at(dY, i, -d_aug_ij)
    np.add.at(dY, j, -d_aug_ji)
    if use_negatives:
        coef_i = share * (d_ik < margin) * scale
        coef_j = share * (d_jk < margin) * scale
        diff_i = 2.0 * (y_i[:, None, :] - z_k) / C
        diff_j = 2.0 * (y_j[:, None, :] - z_k) / C
        np.add.at(dY, i, -np.sum(coef_i[..., None] * diff_i, axis=1))
        np.add.at(dY, j, -np.sum(coef_j[..., None] * diff_j, axis=1))
        np.add.at(dZ, batch.negatives, coef_i[..., None] * diff_i + coef_j[..., None] * diff_j)
    return SmoothnessResult(value, terms, dY, dZ, d_aug_ij, d_aug_ji, terms / B)


@dataclass
class ClassificationResult:
    value: float
    dY: np.ndarray
    dZ: np.ndarray
    unlabeled: bool


def _cross_entropy(logits: np.ndarray, targets: np.ndarray):
    """Per-row CE of softmax(logits) against integer targets, and its gradient w.r.t. logits"""
    logp = log_softmax(logits, axis=1)
    rows = np.arange(len(targets))
    grad = softmax(logits, axis=1)
    grad[rows, targets] -= 1.0
    return -logp[rows, targets], grad


def classification_loss(
    batch: EdgeBatch,
    Y: np.ndarray,
    Z: np.ndarray,
    labels: np.ndarray,
    labeled: np.ndarray,
) -> ClassificationResult:
    """Cross-entropy over labeled batch endpoints, divided by the batch size.

    Each labeled node of the batch contributes CE(softmax(y_i), label_i);
    each batch edge (i, j) contributes CE(softmax(z_j), label_i) if i is
    labeled and CE(softmax(z_i), label_j) if j is labeled.
    """
    B = batch.size
    dY = np.zeros_like(Y)
    dZ = np.zeros_like(Z)
    nodes = np.unique(batch.edges.ravel())
    own = nodes[labeled[nodes]]
    if len(own) == 0:
        return ClassificationResult(0.0, dY, dZ, True)

    total = 0.0
    ce, grad = _cross_entropy(Y[own], labels[own])
    total += ce.sum()
    dY[own] += grad / B
    for src, dst in ((0, 1), (1, 0)):
        rows = batch.edges[labeled[batch.edges[:, src]]]
        if len(rows) == 0:
            continue
        ce, grad = _cross_entropy(Z[rows[:, dst]], labels[rows[:, src]])
        total += ce.sum()
        np.add.at(dZ, rows[:, dst], grad / B)
    return ClassificationResult(float(total / B), dY, dZ, False)


def explicit_weight_loss(
    batch: EdgeBatch,
    sub: SparsifiedSubgraph,
    Y: np.ndarray,
    Z: np.ndarray,
    aug_ij: np.ndarray,
    aug_ji: np.ndarray,
    margin: float = 10.0,
    use_negatives: bool = True,
) -> SmoothnessResult:
    """Smoothness loss with every edge term scaled by its straight-through value g'_ij.

    Edge terms take the hinge form D_pos + mean_k [max(0, m - D_ik) + max(0, m - D_jk)],
    the smoothness term plus 2m on every edge with negatives. It has the same
    θ gradient and is never negative, so lowering a weight never raises the
    loss. `d_weights` on the result is the derivative w.r.t. the weights,
    which the sparsifier turns into a gradient on ψ.
    """
    weights = sub.straight_through[batch.edge_ids]
    result = smoothness_loss(batch, Y, Z, aug_ij, aug_ji, margin, use_negatives, weights)
    if not use_negatives:
        return result
    if not np.isfinite(margin):
        raise ValueError(f"the edge-weighted loss needs a finite margin, got {margin}")
    with_negatives = np.ones(batch.size) if batch.negative_mask is None else batch.negative_mask.any(axis=1)
    floor = 2.0 * margin * with_negatives
    return replace(
        result,
        value=result.value + float(weights @ floor) / batch.size,
        terms=result.terms + floor,
        d_weights=result.d_weights + floor / batch.size,
    )


def total_loss(
    batch: EdgeBatch,
    X: np.ndarray,
    labels: np.ndarray,
    labeled: np.ndarray,
    theta: BackboneState,
    margin: float = 10.0,
    seed: int = 0,
    use_negatives: bool = True,
    fixed_beta: float | None = None,
    edge_weights: np.ndarray | None = None,
    update_running: bool = True,
):
    """L_total = L_smooth + L_cla for one batch, with the gradient over θ.

    The MLP runs only on the nodes the batch touches. The subgraph enters
    solely through which edges and negatives are in `batch`, so nothing here
    depends on ψ. `edge_weights` turns the smoothness part into the
    explicit-weight variant. Returns (LossReport, GradBundle, d_edge_weights).
    """
    nodes = batch.nodes()
    local = batch.relabel(nodes)
    H, cache = mlp_forward(X[nodes], theta, seed=seed, update_running=update_running)
    Y, Z = head_apply(H, theta)
    i, j = local.edges[:, 0], local.edges[:, 1]
    aug_ij, _, cache_ij = interpolate_augment(H[i], H[j], theta, fixed_beta)
    aug_ji, _, cache_ji = interpolate_augment(H[j], H[i], theta, fixed_beta)

    smooth = smoothness_loss(local, Y, Z, aug_ij, aug_ji, margin, use_negatives, edge_weights)
    cla = classification_loss(local, Y, Z, labels[nodes], labeled[nodes])

    grads_ij, dh_i1, dh_j1 = interpolate_backward(smooth.d_aug_ij, cache_ij, theta)
    grads_ji, dh_j2, dh_i2 = interpolate_backward(smooth.d_aug_ji, cache_ji, theta)
    head_grads, dH = head_backward(H, smooth.dY + cla.dY, smooth.dZ + cla.dZ, theta)
    np.add.at(dH, i, dh_i1 + dh_i2)
    np.add.at(dH, j, dh_j1 + dh_j2)

    grads: GradBundle = mlp_backward(dH, theta, cache)
    accumulate(grads, head_grads)
    accumulate(grads, grads_ij)
    accumulate(grads, grads_ji)
    report = LossReport(smooth.value, cla.value, cla.unlabeled)
    return report, grads, smooth.d_weights


def logsumexp_smoothness(kept_edges: np.ndarray, H: np.ndarray, theta: BackboneState, fixed_beta: float | None = None) -> float:
    """Full-enumeration smoothness objective, value only.

    (1/N) Σ_i Σ_{j ∈ N(i)} [D(y_i, g_i→j) - log Σ_{k ∉ N(i) ∪ {i}} exp D(y_i, z_k)].
    Nodes without non-neighbors contribute no negative term. Builds an N×N
    discrepancy matrix, so it is meant for small graphs.
    """
    N = H.shape[0]
    Y, Z = head_apply(H, theta)
    src = np.concatenate([kept_edges[:, 0], kept_edges[:, 1]])
    dst = np.concatenate([kept_edges[:, 1], kept_edges[:, 0]])
    aug, _, _ = interpolate_augment(H[src], H[dst], theta, fixed_beta)
    positive = discrepancy(Y[src], aug)

    adjacent = np.zeros((N, N), dtype=bool)
    adjacent[src, dst] = True
    np.fill_diagonal(adjacent, True)
    pairwise = discrepancy(Y[:, None, :], Z[None, :, :])
    masked = np.where(adjacent, -np.inf, pairwise)
    has_negatives = ~adjacent.all(axis=1)
    lse = np.zeros(N)
    lse[has_negatives] = logsumexp(masked[has_negatives], axis=1)
    return float(np.sum(positive - lse[src]) / N)
