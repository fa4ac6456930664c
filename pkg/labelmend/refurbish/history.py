"""Per-sample ring buffers of end-of-epoch softmax predictions."""

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Optional, Tuple
import logging

import numpy as np

from ..errors import DataError, ShapeError
from ..numerics import avg_pool2x2

logger = logging.getLogger(__name__)

PROB_TOLERANCE = 1e-5


@dataclass
class PredictionHistory:
    """The newest ``capacity`` probability maps (C, h, w) of one sample, keyed by epoch.

    Maps may be stored pooled; ``shape`` is the full-resolution (C, H, W).
    """
    sample_id: str
    capacity: int
    shape: Tuple[int, int, int]
    maps: Deque[Tuple[int, np.ndarray]] = field(default_factory=deque)

    @property
    def epochs(self) -> List[int]:
        return [epoch for epoch, _ in self.maps]

    def append(self, epoch: int, probs: np.ndarray) -> None:
        if self.maps and epoch <= self.maps[-1][0]:
            raise ValueError(
                f"sample {self.sample_id}: epoch {epoch} recorded after epoch {self.maps[-1][0]}"
            )
        sums = probs.sum(axis=0, dtype=np.float64)
        if not np.all(np.abs(sums - 1.0) <= PROB_TOLERANCE):
            raise ValueError(
                f"sample {self.sample_id}: epoch {epoch} map is not a probability map "
                f"(max deviation {float(np.abs(sums - 1.0).max()):.3g})"
            )
        self.maps.append((epoch, probs))
        while len(self.maps) > self.capacity:
            self.maps.popleft()

    def window(self, epoch: int, length: int) -> List[np.ndarray]:
        """Full-resolution maps for epochs ``epoch-length+1 .. epoch``."""
        wanted = list(range(epoch - length + 1, epoch + 1))
        held = dict(self.maps)
        if any(e not in held for e in wanted):
            raise DataError(
                f"sample {self.sample_id}: incomplete prediction history for epoch {epoch} "
                f"(need {wanted}, have {self.epochs})"
            )
        return [self._full(held[e]) for e in wanted]

    def _full(self, probs: np.ndarray) -> np.ndarray:
        fy = self.shape[1] // probs.shape[1]
        fx = self.shape[2] // probs.shape[2]
        if fy == 1 and fx == 1:
            return probs
        return probs.repeat(fy, axis=1).repeat(fx, axis=2)


class HistoryStore:
    """Prediction histories of the training set, written once per sample per epoch."""

    def __init__(self, length: int = 5, pool_cap: Optional[int] = None):
        self.length = length
        self.pool_cap = pool_cap
        self.downsampled = False
        self._histories: Dict[str, PredictionHistory] = {}

    def __contains__(self, sample_id: str) -> bool:
        return sample_id in self._histories

    def __len__(self) -> int:
        return len(self._histories)

    def get(self, sample_id: str) -> PredictionHistory:
        return self._histories[sample_id]

    def _fit(self, probs: np.ndarray) -> np.ndarray:
        fitted = probs
        if self.pool_cap is not None:
            while (
                fitted.size > self.pool_cap
                and fitted.shape[-1] % 2 == 0
                and fitted.shape[-2] % 2 == 0
            ):
                fitted = avg_pool2x2(fitted)
                self.downsampled = True
        return np.ascontiguousarray(fitted, dtype=np.float32)

    def record(self, sample_id: str, epoch: int, probs: np.ndarray) -> None:
        if probs.ndim != 3:
            raise ShapeError(f"sample {sample_id}: prediction must be (C,H,W), got {probs.shape}")
        history = self._histories.get(sample_id)
        if history is None:
            history = PredictionHistory(sample_id, self.length, tuple(probs.shape))
            self._histories[sample_id] = history
        elif tuple(probs.shape) != history.shape:
            raise ShapeError(
                f"sample {sample_id}: prediction shape {probs.shape} != {history.shape}"
            )
        history.append(epoch, self._fit(probs))

    def record_batch(self, epoch: int, ids: List[str], probs: np.ndarray) -> None:
        for sid, p in zip(ids, probs):
            self.record(sid, epoch, p)
