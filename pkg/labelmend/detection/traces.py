"""Per-sample ring buffers of logit gradients and training losses."""

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, Iterable, List, Optional, Tuple
import logging

import numpy as np

from ..errors import DataError, ShapeError
from ..numerics import avg_pool2x2

logger = logging.getLogger(__name__)


@dataclass
class GradientTrace:
    """The most recent ``capacity`` per-epoch gradient vectors and losses of one sample."""
    sample_id: str
    capacity: int
    vectors: Deque[Tuple[int, np.ndarray]] = field(default_factory=deque)
    losses: Deque[Tuple[int, float]] = field(default_factory=deque)

    @property
    def epochs(self) -> List[int]:
        return [epoch for epoch, _ in self.vectors]

    @property
    def last_epoch(self) -> Optional[int]:
        return self.vectors[-1][0] if self.vectors else None

    def append(self, epoch: int, vector: np.ndarray, loss: float) -> None:
        if self.vectors and epoch <= self.vectors[-1][0]:
            raise ValueError(
                f"sample {self.sample_id}: epoch {epoch} recorded after epoch {self.vectors[-1][0]}"
            )
        self.vectors.append((epoch, vector))
        self.losses.append((epoch, float(loss)))
        while len(self.vectors) > self.capacity:
            self.vectors.popleft()
            self.losses.popleft()

    def window(self, epoch: int, length: int) -> List[np.ndarray]:
        """The ``length`` newest vectors, which must end at ``epoch``."""
        return [v for _, v in self._tail(self.vectors, epoch, length)]

    def loss_window(self, epoch: int, length: int) -> List[float]:
        return [loss for _, loss in self._tail(self.losses, epoch, length)]

    def _tail(self, buffer: Deque, epoch: int, length: int) -> List:
        if not buffer or buffer[-1][0] != epoch or len(buffer) < length:
            have = [e for e, _ in buffer]
            raise DataError(
                f"sample {self.sample_id}: insufficient window for epoch {epoch} "
                f"(need {length} epochs ending at {epoch}, have {have})"
            )
        return list(buffer)[-length:]


class TraceStore:
    """Single-writer store of gradient traces, updated once per sample per epoch.

    The first write fixes the vector dimension D. When ``pool_cap`` is set and a
    logit-gradient map would exceed it, the map is 2x2 average-pooled until it
    fits; ``downsampled`` records that this happened. Worst-case memory is
    ``num_samples * D * capacity`` reals.
    """

    def __init__(
        self, window_t: int = 5, literal_window: bool = False, pool_cap: Optional[int] = None
    ):
        self.window_t = window_t
        self.literal_window = literal_window
        self.pool_cap = pool_cap
        # The literal reading of the VOG window spans t+1 epochs
        self.capacity = window_t + 1
        self.dimension: Optional[int] = None
        self.downsampled = False
        self._traces: Dict[str, GradientTrace] = {}

    def __contains__(self, sample_id: str) -> bool:
        return sample_id in self._traces

    def __len__(self) -> int:
        return len(self._traces)

    @property
    def sample_ids(self) -> List[str]:
        return list(self._traces)

    def get(self, sample_id: str) -> GradientTrace:
        return self._traces[sample_id]

    def _fit(self, logit_grad: np.ndarray) -> np.ndarray:
        grad = logit_grad
        if self.pool_cap is not None:
            while grad.size > self.pool_cap and grad.shape[-1] % 2 == 0 and grad.shape[-2] % 2 == 0:
                grad = avg_pool2x2(grad)
                self.downsampled = True
        return np.ascontiguousarray(grad, dtype=np.float32).reshape(-1)

    def record_epoch(self, sample_id: str, epoch: int, logit_grad: np.ndarray, loss: float) -> None:
        """Append one epoch's logit gradient and training loss for ``sample_id``."""
        vector = self._fit(logit_grad)
        if self.dimension is None:
            self.dimension = vector.size
            logger.debug(f"Trace dimension fixed at D={self.dimension}")
        elif vector.size != self.dimension:
            raise ShapeError(
                f"sample {sample_id}: gradient dimension {vector.size} != store dimension "
                f"{self.dimension}"
            )
        trace = self._traces.get(sample_id)
        if trace is None:
            trace = self._traces[sample_id] = GradientTrace(sample_id, self.capacity)
        trace.append(epoch, vector, loss)

    def record_batch(
        self, epoch: int, ids: Iterable[str], logit_grads: np.ndarray, losses: Iterable[float]
    ) -> None:
        for sid, grad, loss in zip(ids, logit_grads, losses):
            self.record_epoch(sid, epoch, grad, loss)

    def memory_reals(self) -> int:
        """Reals currently held across all gradient buffers."""
        return sum(len(t.vectors) for t in self._traces.values()) * (self.dimension or 0)
