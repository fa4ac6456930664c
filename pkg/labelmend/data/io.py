"""Portable dataset storage: binary PGM rasters plus a JSON-lines manifest.

Layout of a dataset directory::

    dataset.json       generator seed, generation parameters, split fractions
    manifest.jsonl     one ManifestRecord per sample
    images/<id>.pgm    8-bit image, value = round(255 * intensity)
    masks/<id>.pgm     training mask, values {0,1,2,3}
    clean/<id>.pgm     pristine reference mask
"""

import hashlib
import json
from pathlib import Path
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..config import NUM_CLASSES, CorruptionKind
from ..errors import DataError
from .phantom import dequantize, quantize
from .sample import LabeledSample
from .splits import SPLITS, DatasetManifest, ManifestRecord

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.jsonl"
DATASET_FILE = "dataset.json"


def write_pgm(path: Path, raster: np.ndarray) -> Path:
    """Write an 8-bit raster as binary PGM (P5, maxval 255)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(raster, dtype=np.uint8)).save(path, format="PPM")
    return path


def read_pgm(path: Path) -> Tuple[np.ndarray, int]:
    """Read a P5 raster; returns the pixels and the byte offset where they start."""
    if not path.exists():
        raise DataError(f"{path}: file not found")
    raw = path.read_bytes()
    if not raw:
        raise DataError(f"{path}: empty file, expected a P5 header at offset 0")
    if not raw.startswith(b"P5"):
        raise DataError(f"{path}: malformed header at offset 0, expected magic 'P5'")
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode != "L":
                raise DataError(f"{path}: expected 8-bit grayscale, got mode {img.mode}")
            pixels = np.array(img, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as e:
        if isinstance(e, DataError):
            raise
        raise DataError(f"{path}: malformed PGM header or truncated body ({e})") from e
    return pixels, len(raw) - pixels.size


def read_mask(path: Path) -> np.ndarray:
    """Read a class-index raster, rejecting any index >= NUM_CLASSES."""
    pixels, data_offset = read_pgm(path)
    bad = np.argwhere(pixels >= NUM_CLASSES)
    if bad.size:
        row, col = (int(v) for v in bad[0])
        offset = data_offset + row * pixels.shape[1] + col
        raise DataError(
            f"{path}: class index {int(pixels[row, col])} >= {NUM_CLASSES} "
            f"at pixel (row {row}, col {col}), byte offset {offset}"
        )
    return pixels


def write_sample(sample: LabeledSample, root: Path, split: str) -> ManifestRecord:
    """Store a sample's three rasters under ``root`` and return its manifest row."""
    record = ManifestRecord(
        id=sample.id,
        image_path=f"images/{sample.id}.pgm",
        mask_path=f"masks/{sample.id}.pgm",
        clean_mask_path=f"clean/{sample.id}.pgm",
        split=split,
        corrupted=sample.corrupted,
        corruption_kind=sample.corruption_kind.value if sample.corruption_kind else None,
    )
    write_pgm(root / record.image_path, quantize(sample.image[0]))
    write_pgm(root / record.mask_path, sample.mask)
    write_pgm(root / record.clean_mask_path, sample.clean_mask)
    return record


def read_sample(record: ManifestRecord, root: Path) -> LabeledSample:
    codes, _ = read_pgm(root / record.image_path)
    mask = read_mask(root / record.mask_path)
    clean = read_mask(root / record.clean_mask_path)
    kind = CorruptionKind(record.corruption_kind) if record.corruption_kind else None
    return LabeledSample(
        id=record.id,
        image=dequantize(codes)[None],
        mask=mask,
        clean_mask=clean,
        corrupted=record.corrupted,
        corruption_kind=kind,
    )


def save_dataset(
    samples: Sequence[LabeledSample], manifest: DatasetManifest, root: Path
) -> DatasetManifest:
    """Write rasters, ``manifest.jsonl`` and ``dataset.json``; returns the manifest with records."""
    root.mkdir(parents=True, exist_ok=True)
    by_id = {s.id: s for s in samples}
    records = {}
    lines = []
    for split in SPLITS:
        for sid in manifest.splits[split]:
            record = write_sample(by_id[sid], root, split)
            records[sid] = record
            lines.append(json.dumps(record.to_dict(), sort_keys=True))
    (root / MANIFEST_FILE).write_text("\n".join(lines) + "\n")
    meta = {
        "seed": manifest.seed,
        "params": manifest.params,
        "digest": dataset_digest(samples, manifest),
    }
    (root / DATASET_FILE).write_text(json.dumps(meta, indent=2, sort_keys=True))
    logger.info(f"Wrote {len(records)} samples to {root}")
    manifest.records = records
    return manifest


def load_dataset(root: Path) -> Tuple[List[LabeledSample], DatasetManifest]:
    """Read a dataset directory written by ``save_dataset``."""
    manifest_path = root / MANIFEST_FILE
    if not manifest_path.exists():
        raise DataError(f"{root}: no {MANIFEST_FILE}")
    meta = {}
    if (root / DATASET_FILE).exists():
        meta = json.loads((root / DATASET_FILE).read_text())

    splits = {name: [] for name in SPLITS}
    records = {}
    samples = []
    for lineno, line in enumerate(manifest_path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = ManifestRecord(**json.loads(line))
        except (json.JSONDecodeError, TypeError) as e:
            raise DataError(f"{manifest_path}:{lineno}: malformed manifest record ({e})") from e
        if record.split not in splits:
            raise DataError(f"{manifest_path}:{lineno}: unknown split {record.split!r}")
        splits[record.split].append(record.id)
        records[record.id] = record
        samples.append(read_sample(record, root))

    manifest = DatasetManifest(
        splits=splits, seed=int(meta.get("seed", 0)), params=meta.get("params", {}), records=records
    )
    return samples, manifest


def dataset_digest(
    samples: Sequence[LabeledSample], manifest: Optional[DatasetManifest] = None
) -> str:
    """SHA-256 over every sample's rasters and flags (and split assignment, if given)."""
    h = hashlib.sha256()
    for sample in sorted(samples, key=lambda s: s.id):
        h.update(sample.id.encode())
        h.update(quantize(sample.image).tobytes())
        h.update(sample.mask.astype(np.uint8).tobytes())
        h.update(sample.clean_mask.astype(np.uint8).tobytes())
        kind = sample.corruption_kind.value if sample.corruption_kind else "-"
        h.update(f"{int(sample.corrupted)}:{kind}".encode())
    if manifest is not None:
        for split in SPLITS:
            h.update(f"{split}={','.join(manifest.splits[split])};".encode())
    return h.hexdigest()
