"""Wilcoxon signed-rank test for paired per-sample scores."""

from dataclasses import dataclass
from typing import Dict, Sequence
import logging

import numpy as np
from scipy.stats import norm, rankdata

logger = logging.getLogger(__name__)

MIN_EFFECTIVE = 5
MAX_EXACT = 12
SIGNIFICANCE = 0.05


@dataclass
class PairedTestResult:
    statistic: float  # W = min(W+, W-)
    n_effective: int
    p_value: float
    method: str  # "exact", "normal" or "underpowered"
    w_plus: float = 0.0
    w_minus: float = 0.0

    @property
    def significant(self) -> bool:
        return self.method != "underpowered" and self.p_value < SIGNIFICANCE

    @property
    def underpowered(self) -> bool:
        return self.method == "underpowered"

    def to_dict(self) -> Dict[str, object]:
        return {
            "statistic": self.statistic,
            "n_effective": self.n_effective,
            "p_value": self.p_value,
            "method": self.method,
            "w_plus": self.w_plus,
            "w_minus": self.w_minus,
            "significant_at_0.05": self.significant,
        }


def exact_p_value(ranks: np.ndarray, statistic: float) -> float:
    """Two-sided p: share of the 2^n sign assignments whose min rank sum is <= W."""
    n = ranks.size
    signs = (np.arange(2**n)[:, None] >> np.arange(n)) & 1
    w_plus = signs @ ranks
    w_min = np.minimum(w_plus, ranks.sum() - w_plus)
    return float(np.count_nonzero(w_min <= statistic + 1e-9)) / 2**n


def normal_p_value(ranks: np.ndarray, statistic: float) -> float:
    """Normal approximation with tie and continuity corrections."""
    n = ranks.size
    mean = n * (n + 1) / 4.0
    _, counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(counts**3 - counts)) / 48.0
    variance = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
    if variance <= 0:
        return 1.0
    numerator = min(statistic - mean + 0.5, 0.0)
    return float(min(1.0, 2.0 * norm.cdf(numerator / np.sqrt(variance))))


def wilcoxon_signed_rank(diffs: Sequence[float]) -> PairedTestResult:
    """Paired test on differences; zeros are dropped and ties share average ranks."""
    d = np.asarray(diffs, dtype=np.float64)
    d = d[d != 0]
    n = int(d.size)
    if n == 0:
        return PairedTestResult(0.0, 0, 1.0, "underpowered")

    ranks = rankdata(np.abs(d), method="average")
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    statistic = min(w_plus, w_minus)

    if n < MIN_EFFECTIVE:
        logger.debug(f"Wilcoxon with only {n} nonzero differences; reporting p=1")
        return PairedTestResult(statistic, n, 1.0, "underpowered", w_plus, w_minus)
    if n <= MAX_EXACT:
        p = exact_p_value(ranks, statistic)
        method = "exact"
    else:
        p = normal_p_value(ranks, statistic)
        method = "normal"
    return PairedTestResult(statistic, n, p, method, w_plus, w_minus)
