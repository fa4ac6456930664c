"""Phantom dataset generation, splits and portable storage."""

from .sample import LabeledSample
from .splits import SPLITS, DatasetManifest, ManifestRecord, split_counts, split_dataset
from .phantom import dequantize, generate_phantom, quantize
from .io import (
    dataset_digest,
    load_dataset,
    read_mask,
    read_pgm,
    read_sample,
    save_dataset,
    write_pgm,
    write_sample,
)

__all__ = [
    "LabeledSample",
    "SPLITS",
    "DatasetManifest",
    "ManifestRecord",
    "split_counts",
    "split_dataset",
    "dequantize",
    "generate_phantom",
    "quantize",
    "dataset_digest",
    "load_dataset",
    "read_mask",
    "read_pgm",
    "read_sample",
    "save_dataset",
    "write_pgm",
    "write_sample",
]
