"""
Structural sparsification network.

Edge keep-probabilities come from a shared embedding, λ_ij = σ(⟨W x_i, W x_j⟩),
are fused with the input adjacency, M = (1 - α) λ + α, and a subgraph is
drawn with a single-variate Gumbel relaxation
    soft = σ((log M + G) / τ),  hard = ⌊soft + ½⌋,  G ~ Gumbel(0, 1).
Everything is indexed over the canonical undirected edge list, one draw per
undirected edge. The hard sample keeps an edge with probability 1 - exp(-M)
whatever τ is; τ only sharpens `soft`.
"""

import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.special import expit

from .config import MIN_FUSED_PROB, SPARSIFIER_INIT_SCORE
from .nn.backbone import GradBundle, glorot_uniform
from .utils.errors import NonFiniteError, ShapeError
from .utils.serialization import atomic_write_text, format_float

logger = logging.getLogger(__name__)


@dataclass
class SparsifierState:
    """Parameters ψ (the embedding W) plus the fusion factor α and temperature τ"""

    embed_weight: np.ndarray
    fusion_alpha: float
    temperature: float

    def __post_init__(self):
        if not 0.0 <= self.fusion_alpha <= 1.0:
            raise ValueError(f"fusion_alpha must lie in [0, 1], got {self.fusion_alpha}")
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if not np.all(np.isfinite(self.embed_weight)):
            raise NonFiniteError("sparsifier embedding contains non-finite values")

    def parameters(self) -> dict[str, np.ndarray]:
        return {"embed_weight": self.embed_weight}

    def copy(self) -> "SparsifierState":
        return replace(self, embed_weight=self.embed_weight.copy())


def init_sparsifier(
    in_dim: int,
    embed_dim: int,
    fusion_alpha: float,
    temperature: float,
    seed: int,
    features: np.ndarray | None = None,
    edges: np.ndarray | None = None,
) -> SparsifierState:
    """Glorot-initialized W.

    Given the graph's features and edges, W is rescaled so the edge scores
    ⟨W x_i, W x_j⟩ have root-mean-square SPARSIFIER_INIT_SCORE; an unscaled
    Glorot W puts most λ in the flat tails of the sigmoid.
    """
    rng = np.random.default_rng(seed)
    weight = glorot_uniform(rng, in_dim, embed_dim, shape=(embed_dim, in_dim))
    if features is not None and edges is not None and len(edges):
        edges = np.asarray(edges)
        E = np.asarray(features, dtype=np.float64) @ weight.T
        rms = float(np.sqrt(np.mean(np.einsum("ij,ij->i", E[edges[:, 0]], E[edges[:, 1]]) ** 2)))
        if rms > 0:
            weight *= np.sqrt(SPARSIFIER_INIT_SCORE / rms)
    return SparsifierState(weight, fusion_alpha, temperature)


@dataclass(frozen=True)
class SparsifiedSubgraph:
    """One Gumbel draw over the original edge set.

    `hard` is the forward value of every edge (the straight-through value);
    derivatives flow as if it were `soft`. `noise` keeps the Gumbel draw so
    the same sample can be re-evaluated under perturbed parameters.
    """

    edges: np.ndarray
    fused: np.ndarray
    noise: np.ndarray
    soft: np.ndarray
    hard: np.ndarray
    temperature: float
    n_clamped: int = 0

    @property
    def straight_through(self) -> np.ndarray:
        return self.hard

    @property
    def kept(self) -> np.ndarray:
        return self.hard > 0.5

    @property
    def kept_edges(self) -> np.ndarray:
        return self.edges[self.kept]

    @property
    def n_kept(self) -> int:
        return int(self.kept.sum())

    def soft_grad_wrt_fused(self) -> np.ndarray:
        """∂soft/∂M per edge; zero where M sat on the clamp floor"""
        slope = self.soft * (1.0 - self.soft) / (self.temperature * self.fused)
        return np.where(self.fused > MIN_FUSED_PROB, slope, 0.0)


def full_subgraph(edges: np.ndarray) -> SparsifiedSubgraph:
    """Every edge kept, as used during warm-up"""
    ones = np.ones(len(edges))
    return SparsifiedSubgraph(edges, ones, np.zeros(len(edges)), ones, ones, 1.0)


def embed(X: np.ndarray, psi: SparsifierState) -> np.ndarray:
    if X.ndim != 2 or X.shape[1] != psi.embed_weight.shape[1]:
        raise ShapeError(f"expected features with {psi.embed_weight.shape[1]} columns, got shape {X.shape}")
    return X @ psi.embed_weight.T


def edge_probs(X: np.ndarray, edges: np.ndarray, psi: SparsifierState, embeddings: np.ndarray | None = None) -> np.ndarray:
    """λ_ij = σ(z_i · z_j) with z = W x, evaluated on the given edges only"""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(edges) == 0:
        raise ShapeError("edge_probs needs at least one edge")
    Z = embed(X, psi) if embeddings is None else embeddings
    scores = np.einsum("ef,ef->e", Z[edges[:, 0]], Z[edges[:, 1]])
    return expit(scores)


def fuse(probs: np.ndarray, fusion_alpha: float) -> np.ndarray:
    """M = (1 - α) λ + α A, with A = 1 on every existing edge"""
    if not 0.0 <= fusion_alpha <= 1.0:
        raise ValueError(f"fusion_alpha must lie in [0, 1], got {fusion_alpha}")
    return (1.0 - fusion_alpha) * probs + fusion_alpha


def gumbel_sample(
    fused: np.ndarray,
    temperature: float,
    seed: int,
    edges: np.ndarray | None = None,
    noise: np.ndarray | None = None,
) -> SparsifiedSubgraph:
    """Draw one relaxed Bernoulli per edge from the fused strategy M.

    Pass `noise` to reuse a previous Gumbel draw instead of sampling from
    `seed`. M is clamped to [1e-12, 1] before the log; clamped entries are
    counted on the result and logged.
    """
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    fused = np.asarray(fused, dtype=np.float64)
    n_clamped = int(np.sum(fused < MIN_FUSED_PROB))
    if n_clamped:
        logger.warning(f"{n_clamped} fused edge probabilities below {MIN_FUSED_PROB}, clamped")
    fused = np.clip(fused, MIN_FUSED_PROB, 1.0)
    if noise is None:
        noise = np.random.default_rng(seed).gumbel(size=fused.shape)
    soft = expit((np.log(fused) + noise) / temperature)
    hard = np.floor(soft + 0.5)
    if edges is None:
        edges = np.zeros((len(fused), 2), dtype=np.int64)
    return SparsifiedSubgraph(np.asarray(edges), fused, noise, soft, hard, float(temperature), n_clamped)


def sample_subgraph(
    X: np.ndarray,
    edges: np.ndarray,
    psi: SparsifierState,
    seed: int,
    noise: np.ndarray | None = None,
) -> tuple[SparsifiedSubgraph, np.ndarray]:
    """λ → M → Gumbel sample. Returns the subgraph and λ (needed for the backward pass)."""
    probs = edge_probs(X, edges, psi)
    sub = gumbel_sample(fuse(probs, psi.fusion_alpha), psi.temperature, seed, edges=edges, noise=noise)
    return sub, probs


def relaxed_subgraph(sub: SparsifiedSubgraph) -> SparsifiedSubgraph:
    """The same draw with the soft values used as forward values"""
    return replace(sub, hard=sub.soft)


def sparsifier_backward(
    X: np.ndarray,
    psi: SparsifierState,
    probs: np.ndarray,
    sub: SparsifiedSubgraph,
    d_edge: np.ndarray,
) -> GradBundle:
    """∂/∂W of an objective whose derivative w.r.t. each edge's straight-through value is `d_edge`"""
    d_fused = d_edge * sub.soft_grad_wrt_fused()
    d_score = d_fused * (1.0 - psi.fusion_alpha) * probs * (1.0 - probs)
    Z = embed(X, psi)
    src, dst = sub.edges[:, 0], sub.edges[:, 1]
    dZ = np.zeros_like(Z)
    np.add.at(dZ, src, d_score[:, None] * Z[dst])
    np.add.at(dZ, dst, d_score[:, None] * Z[src])
    return {"embed_weight": dZ.T @ X}


def dump_subgraph(sub: SparsifiedSubgraph, path) -> None:
    """Write sparsified.tsv: src, dst, soft, hard"""
    lines = ["src\tdst\tsoft\thard"]
    for (src, dst), soft, hard in zip(sub.edges, sub.soft, sub.hard):
        lines.append(f"{int(src)}\t{int(dst)}\t{format_float(soft)}\t{int(hard)}")
    atomic_write_text(Path(path), "\n".join(lines) + "\n")
    logger.info(f"Wrote {len(sub.edges)} sampled edges ({sub.n_kept} kept) to {path}")
