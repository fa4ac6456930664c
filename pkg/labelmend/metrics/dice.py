"""Per-class Dice overlap."""

from dataclasses import dataclass
from typing import Dict, Sequence

import numpy as np

from ..config import CLASS_NAMES, FOREGROUND_CLASSES
from ..errors import ShapeError


def dice(mask_a: np.ndarray, mask_b: np.ndarray, cls: int) -> float:
    """2|A∩B| / (|A|+|B|) for the class-``cls`` pixels; 1 when both are empty."""
    if mask_a.shape != mask_b.shape:
        raise ShapeError(f"dice: shape mismatch {mask_a.shape} vs {mask_b.shape}")
    a = mask_a == cls
    b = mask_b == cls
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.logical_and(a, b).sum()) / total


@dataclass
class DiceVector:
    """Dice of each foreground class and their unweighted mean."""
    per_class: Dict[int, float]

    @property
    def mean(self) -> float:
        return float(np.mean(list(self.per_class.values())))

    def as_row(self) -> Dict[str, float]:
        row = {CLASS_NAMES[c]: v for c, v in self.per_class.items()}
        row["mean"] = self.mean
        return row


def dice_vector(
    mask_a: np.ndarray, mask_b: np.ndarray, classes: Sequence[int] = FOREGROUND_CLASSES
) -> DiceVector:
    return DiceVector({c: dice(mask_a, mask_b, c) for c in classes})


def foreground_dice(mask_a: np.ndarray, mask_b: np.ndarray) -> float:
    return dice_vector(mask_a, mask_b).mean
