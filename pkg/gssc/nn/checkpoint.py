"""
JSON checkpoints holding θ, ψ and the configuration that produced them
"""

import json
import logging
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from ..config import CHECKPOINT_FORMAT
from ..sparsifier import SparsifierState
from ..utils.errors import CheckpointError
from ..utils.schemas import TrainConfig
from ..utils.serialization import atomic_write_text
from .backbone import BackboneState

logger = logging.getLogger(__name__)


def _pack(array: np.ndarray) -> dict:
    array = np.asarray(array, dtype=np.float64)
    return {"shape": list(array.shape), "data": array.ravel().tolist()}


def _unpack(entry: dict) -> np.ndarray:
    data = np.array(entry["data"], dtype=np.float64)
    return data.reshape(entry["shape"])


def save_checkpoint(path, theta: BackboneState, psi: SparsifierState, config: TrainConfig, meta: dict | None = None) -> None:
    tensors = {name: _pack(p) for name, p in theta.parameters().items()}
    tensors.update({name: _pack(b) for name, b in theta.buffers().items()})
    payload = {
        "format": CHECKPOINT_FORMAT,
        "config": json.loads(config.model_dump_json()),
        "meta": meta or {},
        "theta": {
            "n_layers": theta.n_layers,
            "dropout_rate": theta.dropout_rate,
            "tensors": tensors,
        },
        "psi": {
            "fusion_alpha": psi.fusion_alpha,
            "temperature": psi.temperature,
            "embed_weight": _pack(psi.embed_weight),
        },
    }
    atomic_write_text(Path(path), json.dumps(payload, sort_keys=True) + "\n")
    logger.info(f"Saved checkpoint to {path}")


def load_checkpoint(path):
    """Returns (theta, psi, config, meta). θ comes back in eval mode."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path}: expected format {CHECKPOINT_FORMAT!r}, got {payload.get('format')!r}")
    try:
        config = TrainConfig.model_validate(payload["config"])
        tensors = payload["theta"]["tensors"]
        L = payload["theta"]["n_layers"]

        def stack(kind):
            return [_unpack(tensors[f"layers.{l}.{kind}"]) for l in range(L)]

        theta = BackboneState(
            weights=stack("weight"),
            bn_scale=stack("bn_scale"),
            bn_shift=stack("bn_shift"),
            running_mean=stack("running_mean"),
            running_var=stack("running_var"),
            head_f=_unpack(tensors["head_f"]),
            head_g=_unpack(tensors["head_g"]),
            interp_weight=_unpack(tensors["interp_weight"]),
            dropout_rate=payload["theta"]["dropout_rate"],
            training=False,
        )
        psi = SparsifierState(
            _unpack(payload["psi"]["embed_weight"]),
            payload["psi"]["fusion_alpha"],
            payload["psi"]["temperature"],
        )
    except (KeyError, TypeError, ValueError, ValidationError) as e:
        raise CheckpointError(f"{path}: malformed checkpoint ({e})") from e
    return theta, psi, config, payload.get("meta", {})
