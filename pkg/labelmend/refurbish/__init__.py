"""Prediction histories and pseudo-label refurbishment."""

from .history import HistoryStore, PredictionHistory
from .refurbish import (
    RefurbishedLabel,
    RefurbishmentEvent,
    RefurbishmentLog,
    dump_masks,
    pseudo_label,
    refurbish_step,
)

__all__ = [
    "HistoryStore",
    "PredictionHistory",
    "RefurbishedLabel",
    "RefurbishmentEvent",
    "RefurbishmentLog",
    "dump_masks",
    "pseudo_label",
    "refurbish_step",
]
