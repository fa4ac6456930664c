"""Base detector classes."""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional
import logging

from .scores import iqr_flag, loss_score, vog
from .traces import TraceStore

logger = logging.getLogger(__name__)


@dataclass
class DetectionResult:
    """Scores, IQR threshold and flagged ids for one detector at one epoch."""
    detector: str
    epoch: int
    scores: Dict[str, float]
    threshold: float
    flagged: List[str] = field(default_factory=list)


class Detector(ABC):
    """Base class for label-error detectors scoring samples from their traces."""

    name: str = "unnamed_detector"
    description: str = "No description"

    def __init__(self, window_t: int = 5, literal_window: bool = False):
        self.window_t = window_t
        self.literal_window = literal_window

    @abstractmethod
    def score(
        self, store: TraceStore, epoch: int, ids: Optional[List[str]] = None
    ) -> Dict[str, float]:
        """Per-sample scores at ``epoch``; higher means more suspect."""

    def detect(
        self, store: TraceStore, epoch: int, ids: Optional[List[str]] = None
    ) -> DetectionResult:
        """Score, then flag outliers with the IQR rule."""
        scores = self.score(store, epoch, ids)
        flagged, threshold = iqr_flag(scores)
        logger.info(
            f"{self.name} detector at epoch {epoch}: {len(flagged)}/{len(scores)} flagged "
            f"(threshold {threshold:.6g})"
        )
        return DetectionResult(self.name, epoch, scores, threshold, flagged)


class VogDetector(Detector):
    name = "vog"
    description = "Variance of logit gradients over the trailing epoch window"

    def score(
        self, store: TraceStore, epoch: int, ids: Optional[List[str]] = None
    ) -> Dict[str, float]:
        ids = ids if ids is not None else store.sample_ids
        return {
            sid: vog(store.get(sid), epoch, self.window_t, self.literal_window).score for sid in ids
        }


class LossDetector(Detector):
    name = "loss"
    description = "Mean training loss over the trailing epoch window"

    def score(
        self, store: TraceStore, epoch: int, ids: Optional[List[str]] = None
    ) -> Dict[str, float]:
        ids = ids if ids is not None else store.sample_ids
        return {sid: loss_score(store.get(sid), epoch, self.window_t) for sid in ids}
