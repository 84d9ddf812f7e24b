"""Checkpoint persistence: parameters, normalization statistics, the
architecture and its fingerprint, plus optional resumable training state."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .container import read_container, write_container
from .errors import CheckpointError
from .motiondata.normalize import NormStats
from .network import ArchConfig, ModelParams, expected_parameter_names
from .tensorkit import Tensor

CHECKPOINT_KIND = "checkpoint"


def save_checkpoint(
    path,
    params: ModelParams,
    stats: NormStats,
    train_state: Optional[dict] = None,
    optimizer_arrays: Optional[dict[str, np.ndarray]] = None,
) -> None:
    manifest = {
        "config": params.config.to_dict(),
        "fingerprint": params.config.fingerprint(),
        "norm_stats": stats.to_dict(),
        "concat_order": ["motion", "skeleton", "view"],
    }
    if train_state is not None:
        manifest["train_state"] = train_state
    arrays = {f"param/{k}": t.data for k, t in params.tensors.items()}
    if optimizer_arrays:
        arrays.update({f"optim/{k}": v for k, v in optimizer_arrays.items()})
    write_container(path, CHECKPOINT_KIND, manifest, arrays)


def load_checkpoint(
    path,
    expected_config: Optional[ArchConfig] = None,
    dtype=np.float64,
) -> tuple[ModelParams, NormStats, dict]:
    """Returns (params, stats, extras) where extras carries train_state and
    optimizer arrays when present."""
    manifest, arrays = read_container(path, CHECKPOINT_KIND)
    config = ArchConfig.from_dict(manifest["config"])
    if config.fingerprint() != manifest.get("fingerprint"):
        raise CheckpointError("checkpoint fingerprint does not match its architecture")
    if expected_config is not None and expected_config != config:
        raise CheckpointError("checkpoint was written for a different architecture")

    tensors = {}
    for name in expected_parameter_names(config):
        key = f"param/{name}"
        if key not in arrays:
            raise CheckpointError(f"checkpoint missing parameter {name!r}")
        tensors[name] = Tensor(arrays[key].astype(dtype), requires_grad=True)
    orphans = [
        k for k in arrays
        if k.startswith("param/") and k[len("param/"):] not in set(expected_parameter_names(config))
    ]
    if orphans:
        raise CheckpointError(f"checkpoint has orphan parameters: {orphans}")

    params = ModelParams(config=config, tensors=tensors)
    stats = NormStats.from_dict(manifest["norm_stats"])
    extras = {
        "train_state": manifest.get("train_state"),
        "optimizer_arrays": {
            k[len("optim/"):]: v.astype(dtype) for k, v in arrays.items() if k.startswith("optim/")
        },
    }
    return params, stats, extras
