"""
Bi-level training: warm-up on the input graph, then alternating updates of
the backbone θ (lower level, contrastive loss on a sampled subgraph) and the
sparsifier ψ (upper level, subgraph homophily or the explicit-weight loss).
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..contrast.batching import iter_edge_batches
from ..contrast.losses import LossReport, total_loss
from ..graph.core import Graph
from ..graph.homophily import edge_homophily
from ..nn.backbone import BackboneState, init_backbone, predict_logits
from ..nn.optim import Optimizer, make_optimizer
from ..sparsifier import (
    SparsifiedSubgraph,
    SparsifierState,
    full_subgraph,
    init_sparsifier,
    sample_subgraph,
    sparsifier_backward,
)
from ..utils.errors import DegenerateSubgraphError, TrainingError
from ..utils.rng import derive_seed
from ..utils.schemas import MetricsRecord, TrainConfig
from .evaluate import accuracy
from .objective import (
    explicit_weight_objective,
    homophily_objective,
    pseudo_labels,
    relaxed_homophily,
)

logger = logging.getLogger(__name__)

# Tolerance on the relaxed objective before an upper step counts as a decrease
_ASCENT_TOL = 1e-12
_BACKTRACK_SCALE = 0.1


def labeled_mask(graph: Graph) -> np.ndarray:
    mask = np.zeros(graph.n_nodes, dtype=bool)
    mask[graph.train] = True
    return mask


@dataclass
class LowerStepResult:
    reports: list[LossReport]
    unlabeled_batches: int = 0

    def mean(self) -> LossReport:
        if not self.reports:
            return LossReport(0.0, 0.0)
        return LossReport(
            float(np.mean([r.smooth for r in self.reports])),
            float(np.mean([r.cla for r in self.reports])),
        )


def lower_step(
    theta: BackboneState,
    sub: SparsifiedSubgraph,
    graph: Graph,
    config: TrainConfig,
    seed: int,
    optimizer: Optimizer,
) -> LowerStepResult:
    """One epoch of gradient descent on L_total over the kept edges of `sub`.

    θ is updated in place. ψ does not appear: the subgraph only decides
    which edges and negatives the batches contain. In explicit-weight mode
    the smoothness terms carry the straight-through edge values, so θ and ψ
    descend the same weighted loss.
    """
    theta.train()
    labeled = labeled_mask(graph)
    result = LowerStepResult([])
    batches = iter_edge_batches(
        sub,
        graph.n_nodes,
        config.batch_size,
        config.negatives,
        derive_seed(seed, "batches"),
        exclude_neighbors=config.exclude_neighbors,
    )
    explicit = config.objective_mode == "explicit-weight"
    for b, batch in enumerate(batches):
        report, grads, _ = total_loss(
            batch,
            graph.features,
            graph.labels,
            labeled,
            theta,
            margin=config.margin,
            seed=derive_seed(seed, "dropout", b),
            use_negatives=config.use_negatives,
            fixed_beta=config.fixed_beta,
            edge_weights=sub.straight_through[batch.edge_ids] if explicit else None,
        )
        if not np.isfinite(report.total) or not all(np.all(np.isfinite(g)) for g in grads.values()):
            raise TrainingError(
                f"non-finite loss in batch {b} (smooth={report.smooth}, cla={report.cla})",
                dump={
                    "batch": b,
                    "edges": batch.edges.tolist(),
                    "negatives": batch.negatives.tolist(),
                    "loss": report.as_dict(),
                },
            )
        if report.unlabeled:
            result.unlabeled_batches += 1
        optimizer.step(theta.parameters(), grads)
        result.reports.append(report)
    if result.unlabeled_batches:
        logger.warning(f"{result.unlabeled_batches} batches had no labeled node")
    return result


@dataclass
class UpperStepResult:
    objective: float
    backtracked: bool = False


def upper_step(
    psi: SparsifierState,
    theta: BackboneState,
    graph: Graph,
    config: TrainConfig,
    seed: int,
    optimizer: Optimizer,
) -> UpperStepResult:
    """One update of ψ against the subgraph drawn with `seed`.

    Homophily mode ascends H; a step that lowers H on the soft relaxation of
    the same draw is undone and replayed at a tenth of its size. Explicit
    weight mode descends the edge-weighted smoothness loss instead. ψ is
    updated in place; α and τ never change.
    """
    X = graph.features
    sub, probs = sample_subgraph(X, graph.edges, psi, seed)
    params = psi.parameters()

    if config.objective_mode == "explicit-weight":
        objective = explicit_weight_objective(
            X,
            sub,
            theta,
            graph.n_nodes,
            config.batch_size,
            config.negatives,
            config.margin,
            derive_seed(seed, "upper-batches"),
            config.use_negatives,
            config.fixed_beta,
        )
        optimizer.step(params, sparsifier_backward(X, psi, probs, sub, objective.d_edge))
        return UpperStepResult(objective.value)

    Y = predict_logits(X, theta)
    if config.pseudo_labels_use_truth:
        s = pseudo_labels(Y, graph.labels, graph.train)
    else:
        s = pseudo_labels(Y)
    objective = homophily_objective(sub, Y, s)
    grads = sparsifier_backward(X, psi, probs, sub, objective.d_edge)

    before, _ = relaxed_homophily(X, graph.edges, psi, sub.noise, s)
    delta = optimizer.step(params, {name: -g for name, g in grads.items()})
    after, _ = relaxed_homophily(X, graph.edges, psi, sub.noise, s)
    backtracked = after < before - _ASCENT_TOL
    if backtracked:
        for name, d in delta.items():
            params[name] -= (1.0 - _BACKTRACK_SCALE) * d
        logger.warning(f"Upper step lowered relaxed homophily {before:.6f} -> {after:.6f}, retried at 1/10 size")
    return UpperStepResult(objective.value, backtracked)


@dataclass
class TrainResult:
    theta: BackboneState
    psi: SparsifierState
    history: list[MetricsRecord] = field(default_factory=list)
    best_theta: Optional[BackboneState] = None
    best_psi: Optional[SparsifierState] = None
    best_epoch: int = -1
    best_val_acc: float = -1.0

    @property
    def best_record(self) -> Optional[MetricsRecord]:
        return self.history[self.best_epoch] if self.best_epoch >= 0 else None


def _draw_subgraph(graph: Graph, psi: SparsifierState, seed: int):
    """Sample E'_g from ψ, resampling once and then falling back to E when the draw is empty.

    Returns (subgraph to train on, the ψ draw it replaced or itself, seed of
    that draw, fallback flag).
    """
    sub, _ = sample_subgraph(graph.features, graph.edges, psi, seed)
    if sub.n_kept > 0:
        return sub, sub, seed, False
    logger.warning("Sampled subgraph is empty, resampling with a fresh seed")
    seed = derive_seed(seed, "resample")
    sub, _ = sample_subgraph(graph.features, graph.edges, psi, seed)
    if sub.n_kept > 0:
        return sub, sub, seed, False
    logger.warning("Resampled subgraph is empty too, training this epoch on the full edge set")
    return full_subgraph(graph.edges), sub, seed, True


def train(
    graph: Graph,
    config: TrainConfig,
    on_epoch: Callable[[MetricsRecord], None] | None = None,
) -> TrainResult:
    """Warm up for `warmup_epochs` on the full graph, then alternate lower and upper steps.

    Every random draw derives from `config.seed`, so the metrics history is a
    pure function of (graph, config). The best state by validation accuracy
    is kept; ties go to the earliest epoch.
    """
    if graph.n_edges == 0:
        raise DegenerateSubgraphError("degenerate subgraph: the input graph has no edges")
    if len(graph.train) == 0:
        raise TrainingError("the train split is empty")

    seed = config.seed
    theta = init_backbone(
        graph.n_features, config.hidden, graph.n_classes, config.layers, config.dropout, derive_seed(seed, "theta")
    )
    psi = init_sparsifier(
        graph.n_features, config.hidden, config.fusion_alpha, config.temperature, derive_seed(seed, "psi"),
        features=graph.features, edges=graph.edges,
    )
    theta_optimizer = make_optimizer(config.optimizer, config.lr_theta, config.weight_decay)
    psi_optimizer = make_optimizer(config.optimizer, config.lr_psi)
    result = TrainResult(theta, psi)
    full = full_subgraph(graph.edges)

    logger.info(f"Training on {graph!r} for {config.epochs} epochs ({config.warmup_epochs} warm-up)")
    for epoch in range(config.epochs):
        epoch_seed = derive_seed(seed, "epoch", epoch)
        warmup = epoch < config.warmup_epochs
        if epoch == config.warmup_epochs and epoch > 0:
            logger.info(f"Warm-up done, starting bi-level phase at epoch {epoch}")

        if warmup:
            sub, drawn, draw_seed, fallback = full, full, epoch_seed, False
        else:
            sub, drawn, draw_seed, fallback = _draw_subgraph(graph, psi, derive_seed(epoch_seed, "sample"))

        unlabeled = 0
        for step in range(config.inner_steps):
            lower = lower_step(theta, sub, graph, config, derive_seed(epoch_seed, "lower", step), theta_optimizer)
            unlabeled += lower.unlabeled_batches
        losses = lower.mean()

        if not (warmup or fallback or config.freeze_sparsifier):
            upper_step(psi, theta, graph, config, draw_seed, psi_optimizer)

        logits = predict_logits(graph.features, theta)
        pseudo = pseudo_labels(logits)
        kept = drawn.kept_edges
        objective = homophily_objective(drawn, logits).value if drawn.n_kept else 0.0
        record = MetricsRecord(
            epoch=epoch,
            phase="warmup" if warmup else "bilevel",
            loss_smooth=losses.smooth,
            loss_cla=losses.cla,
            loss_total=losses.total,
            n_edges=graph.n_edges,
            hard_edge_count=drawn.n_kept,
            hard_homophily_pseudo=edge_homophily(kept, pseudo) if len(kept) else 0.0,
            hard_homophily_true=edge_homophily(kept, graph.labels) if len(kept) else 0.0,
            homophily_objective=objective,
            train_acc=accuracy(logits, graph.labels, graph.train),
            val_acc=accuracy(logits, graph.labels, graph.val),
            test_acc=accuracy(logits, graph.labels, graph.test),
            unlabeled_batches=unlabeled,
            fallback=fallback,
        )
        result.history.append(record)
        if record.val_acc > result.best_val_acc:
            result.best_val_acc = record.val_acc
            result.best_epoch = epoch
            result.best_theta = theta.copy().eval()
            result.best_psi = psi.copy()
        if on_epoch is not None:
            on_epoch(record)
        logger.info(
            f"Epoch {epoch} [{record.phase}] loss={record.loss_total:.4f} edges={record.hard_edge_count}/{graph.n_edges} "
            f"homophily={record.hard_homophily_true:.4f} val={record.val_acc:.4f} test={record.test_acc:.4f}"
        )

    theta.eval()
    return result
