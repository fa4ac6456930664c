"""Variance-of-gradients and loss scores, and the IQR outlier rule."""

from dataclasses import dataclass
from typing import List, Mapping, Sequence, Tuple

import numpy as np

from ..errors import DataError
from .traces import GradientTrace

MIN_IQR_SCORES = 4


@dataclass
class VogScore:
    """VOG of one sample at one epoch; ``mean`` is the window mean gradient used."""
    sample_id: str
    epoch: int
    score: float
    mean: np.ndarray


def vog_from_window(
    window: Sequence[np.ndarray], window_t: int, literal: bool = False
) -> Tuple[float, np.ndarray]:
    """Mean over dimensions of the per-dimension standard deviation across ``window``.

    Single pass (Welford) in float64. The default window is the last t epochs
    with divisor t. With ``literal`` the window holds t+1 epochs and both the mean
    and the variance divide by t, exactly as the summation bounds read.
    """
    mean = np.zeros(window[0].shape, dtype=np.float64)
    m2 = np.zeros_like(mean)
    for k, vector in enumerate(window, start=1):
        x = vector.astype(np.float64)
        delta = x - mean
        mean += delta / k
        m2 += delta * (x - mean)

    n = len(window)
    if literal:
        # Shift the sum of squares from the true mean to sum/t
        shifted_mean = mean * n / window_t
        m2 = m2 + n * (mean - shifted_mean) ** 2
        mean = shifted_mean
    variance = np.maximum(m2 / window_t, 0.0)
    return float(np.sqrt(variance).mean()), mean


def vog(trace: GradientTrace, epoch: int, window_t: int = 5, literal: bool = False) -> VogScore:
    """VOG of ``trace`` at ``epoch``; needs t (t+1 if literal) epochs ending at ``epoch``."""
    length = window_t + 1 if literal else window_t
    score, mean = vog_from_window(trace.window(epoch, length), window_t, literal)
    return VogScore(sample_id=trace.sample_id, epoch=epoch, score=score, mean=mean)


def loss_score(trace: GradientTrace, epoch: int, window_t: int = 5) -> float:
    """Mean training loss over the last t epochs ending at ``epoch``."""
    return float(np.mean(np.asarray(trace.loss_window(epoch, window_t), dtype=np.float64)))


def quartiles(values: Sequence[float]) -> Tuple[float, float]:
    """Q1 and Q3 by linear interpolation at position p*(n-1) of the sorted values."""
    arr = np.asarray(values, dtype=np.float64)
    q1, q3 = np.quantile(arr, [0.25, 0.75], method="linear")
    return float(q1), float(q3)


def iqr_threshold(values: Sequence[float]) -> float:
    q1, q3 = quartiles(values)
    return q3 + 1.5 * (q3 - q1)


def iqr_flag(scores: Mapping[str, float]) -> Tuple[List[str], float]:
    """Ids whose score is strictly greater than Q3 + 1.5 * IQR, plus that threshold."""
    if len(scores) < MIN_IQR_SCORES:
        raise DataError(
            f"IQR rule needs at least {MIN_IQR_SCORES} scores, got {len(scores)}"
        )
    threshold = iqr_threshold(list(scores.values()))
    flagged = sorted(sid for sid, score in scores.items() if score > threshold)
    return flagged, threshold
