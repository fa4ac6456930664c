"""Synthetic ground-truth label errors."""

from .morphology import StructuringElement, close, dilate, erode
from .operators import BoundaryOp, boundary_distortion, incomplete_label, merged_labels
from .policy import (
    CorruptionEdit,
    corrupt_dataset,
    corrupted_count,
    draw_edit,
    random_policy,
    systematic_policy,
)

__all__ = [
    "StructuringElement",
    "close",
    "dilate",
    "erode",
    "BoundaryOp",
    "boundary_distortion",
    "incomplete_label",
    "merged_labels",
    "CorruptionEdit",
    "corrupt_dataset",
    "corrupted_count",
    "draw_edit",
    "random_policy",
    "systematic_policy",
]
