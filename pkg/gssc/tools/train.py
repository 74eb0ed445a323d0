"""
Training tool: resolves the configuration, writes the run manifest, metrics and checkpoints
"""

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from .. import __version__
from ..config import (
    BEST_CHECKPOINT,
    FINAL_CHECKPOINT,
    MANIFEST_FILE,
    METRICS_FILE,
    THREADS,
)
from ..graph import Graph, dataset_fingerprint, load_graph
from ..nn.checkpoint import save_checkpoint
from ..training import TrainResult, train
from ..utils.errors import GsscError
from ..utils.rng import derive_seed
from ..utils.schemas import RunManifest, TrainConfig
from ..utils.serialization import atomic_directory, dumps

logger = logging.getLogger(__name__)


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> TrainConfig:
    """File values first, then every non-None override on top. Unknown keys are rejected."""
    values = {}
    if path:
        try:
            values = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise GsscError(f"cannot read config {path}: {e}") from e
        if not isinstance(values, dict):
            raise GsscError(f"config {path} must hold a JSON object")
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return TrainConfig.model_validate(values)


def with_overrides(config: TrainConfig, **update) -> TrainConfig:
    """A validated copy of `config` with some fields replaced"""
    return TrainConfig.model_validate({**config.model_dump(), **update})


def best_test_accuracy(result: TrainResult) -> float:
    """Test accuracy logged at the epoch with the best validation accuracy"""
    return result.best_record.test_acc


def run_seeds(config: TrainConfig) -> dict[str, int]:
    return {
        'seed': config.seed,
        'theta': derive_seed(config.seed, "theta"),
        'psi': derive_seed(config.seed, "psi"),
    }


def train_run(graph: Graph, config: TrainConfig, out: str, fingerprint: str) -> TrainResult:
    """Train and write manifest, metrics.jsonl, best.ckpt and final.ckpt into `out` atomically"""
    with atomic_directory(out) as scratch:
        manifest = RunManifest(
            config=config,
            dataset_fingerprint=fingerprint,
            seeds=run_seeds(config),
            tool_version=__version__,
            threads=THREADS,
            outputs={
                'metrics': METRICS_FILE,
                'best_checkpoint': BEST_CHECKPOINT,
                'final_checkpoint': FINAL_CHECKPOINT,
            },
            created_at=datetime.now(timezone.utc).isoformat(),
        )
        (scratch / MANIFEST_FILE).write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")

        with open(scratch / METRICS_FILE, "w", encoding="utf-8", newline="\n") as metrics:
            def write_record(record):
                metrics.write(record.model_dump_json() + "\n")
                metrics.flush()

            result = train(graph, config, on_epoch=write_record)

        best = result.best_record
        save_checkpoint(
            scratch / BEST_CHECKPOINT,
            result.best_theta,
            result.best_psi,
            config,
            {'epoch': best.epoch, 'val_acc': best.val_acc, 'test_acc': best.test_acc},
        )
        last = result.history[-1]
        save_checkpoint(
            scratch / FINAL_CHECKPOINT,
            result.theta,
            result.psi,
            config,
            {'epoch': last.epoch, 'val_acc': last.val_acc, 'test_acc': last.test_acc},
        )
    return result


def gssc_train(data: str, out: str, config: Optional[str] = None, overrides: Optional[dict] = None) -> str:
    """Train GSSC on a dataset directory"""

    resolved = load_config(config, overrides)
    graph = load_graph(data)
    logger.info(f"Training run into {out} with seed {resolved.seed}")
    result = train_run(graph, resolved, out, dataset_fingerprint(data))

    best = result.best_record
    last = result.history[-1]
    return dumps({
        'out': str(out),
        'epochs': len(result.history),
        'best_epoch': best.epoch,
        'best_val_acc': best.val_acc,
        'test_acc_at_best': best.test_acc,
        'final_test_acc': last.test_acc,
        'final_edge_count': last.hard_edge_count,
        'final_homophily': last.hard_homophily_true,
    })
