"""The three label error operators. Each returns a new mask; inputs are never mutated."""

from enum import Enum
from typing import Optional

import numpy as np

from ..errors import ConfigError, DataError
from .morphology import StructuringElement, dilate, erode


class BoundaryOp(str, Enum):
    DILATE = "dilate"
    ERODE = "erode"


def round_half_up(value: float) -> int:
    return int(np.floor(value + 0.5))


def incomplete_label(
    mask: np.ndarray,
    cls: int,
    fraction: float,
    seed: Optional[int] = None,
    angle: Optional[float] = None,
) -> np.ndarray:
    """Relabel a half-plane slice of class ``cls`` to background.

    A cut line at ``angle`` (radians; 0 sweeps down from the top row, pi/2 in
    from the right) is swept across the structure until round(fraction * |cls|)
    pixels are removed. Pixels on the same sweep position are taken in raster
    order so the count is exact. The angle is drawn from ``seed`` when omitted.
    """
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"removal fraction must be in (0, 1), got {fraction}")
    rows, cols = np.nonzero(mask == cls)
    if rows.size == 0:
        raise DataError(f"class {cls} is absent from the mask")
    if angle is None:
        angle = float(np.random.default_rng(seed).uniform(0.0, 2.0 * np.pi))

    target = round_half_up(fraction * rows.size)
    out = mask.copy()
    if target == 0:
        return out

    sweep = -rows * np.cos(angle) + cols * np.sin(angle)
    flat = rows * mask.shape[1] + cols
    order = np.lexsort((flat, -sweep))
    removed = order[:target]
    out[rows[removed], cols[removed]] = 0
    return out


def boundary_distortion(
    mask: np.ndarray, cls: int, op: BoundaryOp, radius: int
) -> np.ndarray:
    """Dilate or erode class ``cls`` with a disk of ``radius``.

    Dilation overwrites whatever class the newly covered pixels had; erosion
    hands vacated pixels to background. Eroding a structure away entirely is
    allowed.
    """
    element = StructuringElement(radius)
    region = mask == cls
    out = mask.copy()
    if BoundaryOp(op) is BoundaryOp.DILATE:
        out[dilate(region, element)] = cls
    else:
        out[region & ~erode(region, element)] = 0
    return out


def merged_labels(mask: np.ndarray, source: int, target: int) -> np.ndarray:
    """Relabel every ``source`` pixel as ``target``."""
    if source == target:
        raise ConfigError(f"merge source and target must differ, got {source}")
    region = mask == source
    if not region.any():
        raise DataError(f"class {source} is absent from the mask")
    out = mask.copy()
    out[region] = target
    return out
