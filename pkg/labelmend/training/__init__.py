"""Training loop and the label-quality hook."""

from .trainer import EpochRecord, TrainingHook, TrainResult, score_split, train
from .pipeline import LabelQualityHook

__all__ = [
    "EpochRecord",
    "TrainingHook",
    "TrainResult",
    "score_split",
    "train",
    "LabelQualityHook",
]
