"""Minibatch training with best-validation checkpoint selection.

Each epoch shuffles the training ids with a generator seeded by
``(train.seed, epoch)``, runs Adam on batch-mean gradients, then snapshots
softmax predictions for every training sample and scores the validation split.
Per-sample losses, logit gradients and predictions are published on the
``epoch:end`` event; hooks may replace training masks there.
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Protocol, Sequence, Tuple
import logging

import numpy as np

from ..config import ExperimentConfig
from ..core.events import (
    EVENT_CHECKPOINT_BEST,
    EVENT_EPOCH_END,
    EVENT_EPOCH_SUMMARY,
    EventBus,
)
from ..data.sample import LabeledSample
from ..data.splits import DatasetManifest
from ..errors import DataError
from ..metrics.dice import foreground_dice
from ..model import AdamState, Checkpoint, ModelParams, adam_step, forward, init_model
from ..numerics import Tape, backward, softmax, softmax_cross_entropy

logger = logging.getLogger(__name__)

EVAL_BATCH = 16


class TrainingHook(Protocol):
    def attach(self, bus: EventBus) -> None: ...


@dataclass
class EpochRecord:
    """One trace-log row. Epoch 0 scores the initial parameters."""
    epoch: int
    train_loss: Optional[float]
    train_dice: Optional[float]
    val_loss: float
    val_dice: float
    refurbished: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class TrainResult:
    best: Checkpoint
    final: ModelParams
    trace_log: List[EpochRecord]
    trainset: Dict[str, LabeledSample] = field(default_factory=dict)

    def __iter__(self):
        return iter((self.best, self.final, self.trace_log))


def _stack(samples: Sequence[LabeledSample]) -> Tuple[np.ndarray, np.ndarray]:
    images = np.stack([s.image for s in samples]).astype(np.float32, copy=False)
    masks = np.stack([s.mask for s in samples])
    return images, masks


def score_split(
    params: ModelParams, samples: Sequence[LabeledSample]
) -> Tuple[float, float, Dict[str, np.ndarray]]:
    """Mean loss and mean foreground Dice against each sample's current mask.

    Also returns per-sample softmax maps.
    """
    losses: List[float] = []
    dices: List[float] = []
    probs: Dict[str, np.ndarray] = {}
    for start in range(0, len(samples), EVAL_BATCH):
        batch = samples[start:start + EVAL_BATCH]
        images, masks = _stack(batch)
        logits = forward(params, images)
        batch_losses, _ = softmax_cross_entropy(logits, masks)
        batch_probs = softmax(logits.astype(np.float64)).astype(np.float32)
        predicted = batch_probs.argmax(axis=1)
        for s, loss, p, pred in zip(batch, batch_losses, batch_probs, predicted):
            losses.append(float(loss))
            dices.append(foreground_dice(pred, s.mask))
            probs[s.id] = p
    return float(np.mean(losses)), float(np.mean(dices)), probs


def train(
    samples: Iterable[LabeledSample],
    manifest: DatasetManifest,
    config: ExperimentConfig,
    hooks: Optional[Iterable[TrainingHook]] = None,
    bus: Optional[EventBus] = None,
) -> TrainResult:
    """Train a fresh U-Net on the manifest's train split, selecting by val foreground Dice."""
    by_id = {s.id: s for s in samples}
    if not manifest.train or not manifest.val:
        raise DataError("training needs nonempty train and val splits")
    missing = [sid for sid in manifest.train + manifest.val if sid not in by_id]
    if missing:
        raise DataError(f"manifest names samples that were not provided: {missing[:5]}")

    bus = bus or EventBus()
    for hook in hooks or []:
        hook.attach(bus)

    trainset: Dict[str, LabeledSample] = {sid: by_id[sid] for sid in manifest.train}
    val = [by_id[sid] for sid in manifest.val]
    train_ids = list(manifest.train)
    tc = config.train

    params = init_model(config.model, tc.seed)
    state = AdamState.zeros_like(params)

    val_loss, val_dice, _ = score_split(params, val)
    trace_log = [EpochRecord(0, None, None, val_loss, val_dice)]
    best = Checkpoint(params.copy(), 0, min(max(val_dice, 0.0), 1.0))
    logger.info(f"Initial val foreground Dice {val_dice:.4f}")

    for epoch in range(1, tc.epochs + 1):
        order = np.random.default_rng([tc.seed, epoch]).permutation(len(train_ids))
        epoch_losses: Dict[str, float] = {}
        epoch_grads: Dict[str, np.ndarray] = {}

        for start in range(0, len(order), tc.batch_size):
            batch_ids = [train_ids[i] for i in order[start:start + tc.batch_size]]
            images, masks = _stack([trainset[sid] for sid in batch_ids])
            tape = Tape()
            logits = forward(params, images, tape)
            losses, logit_grads = softmax_cross_entropy(logits, masks)
            bundle = backward(tape, logit_grads / len(batch_ids))
            params, state = adam_step(
                params, bundle.parameter_grads, state, tc, context=", ".join(batch_ids)
            )
            for sid, loss, grad in zip(batch_ids, losses, logit_grads):
                epoch_losses[sid] = float(loss)
                epoch_grads[sid] = grad
            logger.debug(f"epoch {epoch} batch {start // tc.batch_size}: loss {losses.mean():.4f}")

        snapshot = [trainset[sid] for sid in train_ids]
        _, train_dice, probs = score_split(params, snapshot)
        train_loss = float(np.mean([epoch_losses[sid] for sid in train_ids]))

        bus.emit(
            EVENT_EPOCH_END,
            {
                "epoch": epoch,
                "ids": train_ids,
                "losses": epoch_losses,
                "logit_grads": epoch_grads,
                "probs": probs,
                "trainset": trainset,
            },
            record=False,
        )

        val_loss, val_dice, _ = score_split(params, val)
        record = EpochRecord(
            epoch=epoch,
            train_loss=train_loss,
            train_dice=train_dice,
            val_loss=val_loss,
            val_dice=val_dice,
            refurbished=sum(1 for s in trainset.values() if s.refurbished),
        )
        trace_log.append(record)
        bus.emit(EVENT_EPOCH_SUMMARY, record.to_dict())
        logger.info(
            f"epoch {epoch}/{tc.epochs}: train loss {train_loss:.4f}, "
            f"val loss {val_loss:.4f}, val Dice {val_dice:.4f}"
        )

        if val_dice > best.score:
            best = Checkpoint(params.copy(), epoch, min(max(val_dice, 0.0), 1.0))
            bus.emit(EVENT_CHECKPOINT_BEST, {"epoch": epoch, "score": best.score})

    logger.info(f"Best checkpoint: epoch {best.epoch} with val foreground Dice {best.score:.4f}")
    return TrainResult(best=best, final=params, trace_log=trace_log, trainset=trainset)
