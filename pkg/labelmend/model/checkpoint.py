"""Checkpoint snapshots and their on-disk container.

A checkpoint file is an uncompressed ``.npz`` archive: one array per parameter
under its dotted name (``enc0.conv1.weight``) plus a ``__meta__`` entry holding
a JSON string with ``format_version``, ``descriptor``, ``epoch`` and ``score``.
Values are stored in their native dtype, so a round trip is bit-exact.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict

import numpy as np

from ..config import ArchitectureDescriptor
from ..errors import DataError
from .unet import ModelParams, check_params

FORMAT_VERSION = 1
META_KEY = "__meta__"


@dataclass
class Checkpoint:
    """Parameters snapshot with the epoch it came from and its validation score."""
    params: ModelParams
    epoch: int
    score: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"checkpoint score must be in [0, 1], got {self.score}")


def save_checkpoint(path: Path, checkpoint: Checkpoint) -> Path:
    """Write ``checkpoint`` to ``path`` (suffix .npz is enforced by numpy)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    meta: Dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "descriptor": checkpoint.params.descriptor.model_dump(),
        "epoch": checkpoint.epoch,
        "score": checkpoint.score,
        "order": list(checkpoint.params.tensors),
    }
    arrays = dict(checkpoint.params.tensors)
    arrays[META_KEY] = np.array(json.dumps(meta, sort_keys=True))
    with open(path, "wb") as f:
        np.savez(f, **arrays)
    return path


def load_checkpoint(path: Path) -> Checkpoint:
    """Read a checkpoint written by ``save_checkpoint``."""
    if not path.exists():
        raise DataError(f"Checkpoint not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as archive:
            meta = json.loads(str(archive[META_KEY]))
            if meta.get("format_version") != FORMAT_VERSION:
                raise DataError(
                    f"{path}: unsupported checkpoint format {meta.get('format_version')}"
                )
            tensors = {name: archive[name] for name in meta["order"]}
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as e:
        if isinstance(e, DataError):
            raise
        raise DataError(f"{path}: malformed checkpoint ({e})") from e

    params = ModelParams(tensors, ArchitectureDescriptor(**meta["descriptor"]))
    try:
        check_params(params)
    except ValueError as e:
        raise DataError(f"{path}: {e}") from e
    return Checkpoint(params=params, epoch=int(meta["epoch"]), score=float(meta["score"]))
