"""
Validated records: training configuration, corruption requests, metrics and manifests
"""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

ObjectiveMode = Literal["homophily", "explicit-weight"]
NoiseKind = Literal["label-symmetric", "label-asymmetric", "edge-perturb"]

_STRICT = ConfigDict(extra="forbid", ser_json_inf_nan="constants", validate_assignment=True)


class TrainConfig(BaseModel):
    """Every hyperparameter of a training run"""

    model_config = _STRICT

    lr_theta: float = Field(0.01, ge=0.0)
    lr_psi: float = Field(0.01, ge=0.0)
    weight_decay: float = Field(5e-4, ge=0.0)
    epochs: int = Field(200, ge=1)
    warmup_epochs: int = Field(100, ge=0)
    layers: int = Field(2, ge=1)
    hidden: int = Field(256, ge=1)
    batch_size: int = Field(512, ge=1)
    fusion_alpha: float = Field(0.3, ge=0.0, le=1.0)
    temperature: float = Field(0.5, gt=0.0)
    negatives: int = Field(5, ge=1)
    margin: float = Field(10.0, gt=0.0)
    dropout: float = Field(0.5, ge=0.0, lt=1.0)
    seed: int = 0
    objective_mode: ObjectiveMode = "homophily"
    optimizer: Literal["adam", "sgd"] = "adam"
    inner_steps: int = Field(1, ge=1)
    exclude_neighbors: bool = True
    use_negatives: bool = True
    fixed_beta: Optional[float] = Field(None, ge=0.0, le=1.0)
    freeze_sparsifier: bool = False
    pseudo_labels_use_truth: bool = False

    @model_validator(mode="after")
    def _check_schedule(self):
        if self.warmup_epochs > self.epochs:
            raise ValueError(f"warmup_epochs ({self.warmup_epochs}) exceeds epochs ({self.epochs})")
        if self.objective_mode == "explicit-weight" and self.use_negatives and self.margin == float("inf"):
            raise ValueError("explicit-weight mode with negatives needs a finite margin")
        return self


class NoiseSpec(BaseModel):
    """A label or structure corruption request"""

    model_config = _STRICT

    kind: NoiseKind
    ratio: float = Field(ge=0.0, le=1.0)
    seed: int = 0
    split: Literal["half", "each"] = "half"


class MetricsRecord(BaseModel):
    """One line of metrics.jsonl"""

    model_config = _STRICT

    epoch: int = Field(ge=0)
    phase: Literal["warmup", "bilevel"]
    loss_smooth: float
    loss_cla: float
    loss_total: float
    n_edges: int = Field(ge=0)
    hard_edge_count: int = Field(ge=0)
    hard_homophily_pseudo: float = Field(ge=0.0, le=1.0)
    hard_homophily_true: float = Field(ge=0.0, le=1.0)
    homophily_objective: float
    train_acc: float = Field(ge=0.0, le=1.0)
    val_acc: float = Field(ge=0.0, le=1.0)
    test_acc: float = Field(ge=0.0, le=1.0)
    unlabeled_batches: int = Field(0, ge=0)
    fallback: bool = False

    @model_validator(mode="after")
    def _check_edge_count(self):
        if self.hard_edge_count > self.n_edges:
            raise ValueError(f"hard_edge_count {self.hard_edge_count} exceeds |E| = {self.n_edges}")
        return self


class RunManifest(BaseModel):
    """Everything needed to reproduce a run, written before training starts"""

    model_config = _STRICT

    config: TrainConfig
    dataset_fingerprint: str
    seeds: dict[str, int]
    tool_version: str
    threads: Optional[int] = None
    outputs: dict[str, str]
    created_at: str
