"""Binary morphology with disk structuring elements."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import ndimage


@dataclass(frozen=True)
class StructuringElement:
    """Disk of the given pixel radius.

    Radius 1 is the 4-connected diamond; larger radii threshold the Euclidean
    distance (x^2 + y^2 <= r^2), which reduces to the diamond at r = 1.
    """
    radius: int

    def __post_init__(self) -> None:
        if self.radius < 1:
            raise ValueError(f"structuring element radius must be >= 1, got {self.radius}")

    @property
    def footprint(self) -> np.ndarray:
        return _disk(self.radius)


@lru_cache(maxsize=16)
def _disk(radius: int) -> np.ndarray:
    yy, xx = np.mgrid[-radius : radius + 1, -radius : radius + 1]
    footprint = (yy * yy + xx * xx) <= radius * radius
    footprint.setflags(write=False)
    return footprint


def dilate(region: np.ndarray, element: StructuringElement) -> np.ndarray:
    """Morphological dilation of a boolean region."""
    return ndimage.binary_dilation(region.astype(bool), structure=element.footprint)


def erode(region: np.ndarray, element: StructuringElement) -> np.ndarray:
    """Morphological erosion; pixels outside the raster count as background."""
    return ndimage.binary_erosion(region.astype(bool), structure=element.footprint, border_value=0)


def close(region: np.ndarray, element: StructuringElement) -> np.ndarray:
    """Dilation followed by erosion; always a superset of ``region``.

    The raster is padded by the radius first so that dilation is never clipped
    at the border, which would otherwise break extensivity there.
    """
    pad = element.radius
    padded = np.pad(region.astype(bool), pad)
    closed = erode(dilate(padded, element), element)
    return closed[pad:-pad, pad:-pad]
