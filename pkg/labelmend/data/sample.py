"""The labeled sample record shared by every stage."""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..config import NUM_CLASSES, CorruptionKind
from ..errors import DataError


@dataclass(eq=False)
class LabeledSample:
    """Image raster, training mask, pristine reference mask and corruption flag."""
    id: str
    image: np.ndarray  # (1, H, W) float32 in [0, 1]
    mask: np.ndarray  # (H, W) uint8 class indices
    clean_mask: np.ndarray
    corrupted: bool = False
    corruption_kind: Optional[CorruptionKind] = None
    refurbished: bool = False  # training mask replaced by a pseudo-label

    def __post_init__(self) -> None:
        if self.image.ndim != 3 or self.image.shape[0] != 1:
            raise DataError(f"sample {self.id}: image must be (1,H,W), got {self.image.shape}")
        spatial = self.image.shape[1:]
        if self.mask.shape != spatial or self.clean_mask.shape != spatial:
            raise DataError(
                f"sample {self.id}: mask {self.mask.shape} / clean mask {self.clean_mask.shape} "
                f"do not match image {spatial}"
            )
        edited = self.corrupted or self.refurbished
        if not edited and not np.array_equal(self.mask, self.clean_mask):
            raise DataError(f"sample {self.id}: uncorrupted sample whose mask differs from clean")
        for name, m in (("mask", self.mask), ("clean_mask", self.clean_mask)):
            if m.size and int(m.max()) >= NUM_CLASSES:
                raise DataError(f"sample {self.id}: {name} has class index >= {NUM_CLASSES}")

    @property
    def shape(self) -> tuple:
        return self.mask.shape

    def with_mask(self, mask: np.ndarray, kind: Optional[CorruptionKind] = None) -> "LabeledSample":
        """Copy carrying a replacement training mask (clean mask untouched)."""
        corrupted = self.corrupted or not np.array_equal(mask, self.clean_mask)
        return replace(
            self,
            mask=mask.astype(np.uint8, copy=False),
            corrupted=corrupted,
            corruption_kind=kind if kind is not None else self.corruption_kind,
        )

    def refurbish(self, mask: np.ndarray) -> "LabeledSample":
        """Copy whose training mask is a pseudo-label; corruption flags keep their truth."""
        return replace(self, mask=mask.astype(np.uint8, copy=False), refurbished=True)
