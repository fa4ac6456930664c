"""Averaged-prediction pseudo-labels and in-place label refurbishment."""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Tuple
import logging

import numpy as np

from ..config import ScheduleConfig
from ..data.io import write_pgm
from ..data.sample import LabeledSample
from ..errors import ConfigError, DataError
from ..metrics.dice import foreground_dice
from .history import HistoryStore, PredictionHistory

logger = logging.getLogger(__name__)


def pseudo_label(
    history: PredictionHistory, epoch: int, length: int = 5
) -> Tuple[np.ndarray, np.ndarray]:
    """Mean of the maps for epochs ``epoch-length+1 .. epoch`` and its per-pixel argmax.

    Ties go to the lowest class index.
    """
    maps = history.window(epoch, length)
    soft = np.mean(np.stack(maps).astype(np.float64), axis=0)
    hard = soft.argmax(axis=0).astype(np.uint8)
    return soft, hard


@dataclass
class RefurbishedLabel:
    sample_id: str
    corrupted: bool
    dice_before: float
    dice_after: float


@dataclass
class RefurbishmentEvent:
    """One refurbishment pass: who was relabeled and how close each label got to clean."""
    epoch: int
    flagged: List[str] = field(default_factory=list)
    labels: List[RefurbishedLabel] = field(default_factory=list)

    def corrupted_labels(self) -> List[RefurbishedLabel]:
        return [r for r in self.labels if r.corrupted]

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "RefurbishmentEvent":
        return cls(
            epoch=data["epoch"],
            flagged=list(data.get("flagged", [])),
            labels=[RefurbishedLabel(**r) for r in data.get("labels", [])],
        )


def refurbish_step(
    trainset: Mapping[str, LabeledSample],
    flagged: Iterable[str],
    histories: HistoryStore,
    epoch: int,
    schedule: ScheduleConfig,
) -> Tuple[Dict[str, LabeledSample], RefurbishmentEvent]:
    """Replace each flagged sample's training mask with its hard pseudo-label.

    Returns a new mapping; unflagged samples are carried over unchanged.
    """
    if not schedule.is_event_epoch(epoch):
        raise ConfigError(
            f"epoch {epoch} is not a refurbishment epoch "
            f"(warm_up={schedule.warm_up}, interval={schedule.interval})"
        )
    flagged_ids = sorted(set(flagged))
    outside = [sid for sid in flagged_ids if sid not in trainset]
    if outside:
        raise DataError(f"cannot refurbish samples outside the training split: {outside[:5]}")

    updated = dict(trainset)
    event = RefurbishmentEvent(epoch=epoch, flagged=flagged_ids)
    for sid in flagged_ids:
        if sid not in histories:
            raise DataError(f"sample {sid}: no prediction history to refurbish from")
        sample = trainset[sid]
        _, hard = pseudo_label(histories.get(sid), epoch, schedule.history_length)
        updated[sid] = sample.refurbish(hard)
        event.labels.append(
            RefurbishedLabel(
                sample_id=sid,
                corrupted=sample.corrupted,
                dice_before=foreground_dice(sample.mask, sample.clean_mask),
                dice_after=foreground_dice(hard, sample.clean_mask),
            )
        )
    logger.info(f"Refurbished {len(flagged_ids)} training labels at epoch {epoch}")
    return updated, event


class RefurbishmentLog:
    """JSON-lines log of refurbishment events, one event per line."""

    def __init__(self, path: Optional[Path] = None):
        self.path = path
        self.events: List[RefurbishmentEvent] = []

    def append(self, event: RefurbishmentEvent) -> None:
        self.events.append(event)
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a") as f:
                f.write(json.dumps(event.to_dict(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: Path) -> "RefurbishmentLog":
        log = cls()
        if not path.exists():
            return log
        for line in path.read_text().splitlines():
            if line.strip():
                log.events.append(RefurbishmentEvent.from_dict(json.loads(line)))
        return log


def dump_masks(samples: Iterable[LabeledSample], directory: Path) -> List[Path]:
    """Write refurbished training masks as PGM for inspection."""
    return [
        write_pgm(directory / f"{s.id}.pgm", s.mask) for s in samples if s.refurbished
    ]
