"""Tests for phantom generation, splits and dataset storage."""

from types import SimpleNamespace

import numpy as np
import pytest

from labelmend.corruption import StructuringElement, dilate
from labelmend.data import (
    DatasetManifest,
    LabeledSample,
    dataset_digest,
    generate_phantom,
    load_dataset,
    read_mask,
    read_pgm,
    save_dataset,
    split_counts,
    split_dataset,
    write_pgm,
)
from labelmend.errors import ConfigError, DataError


def test_generation_is_deterministic():
    """Test that the same seed yields identical images and masks."""
    a = generate_phantom(3, (32, 32), seed=5)
    b = generate_phantom(3, (32, 32), seed=5)
    for x, y in zip(a, b):
        assert x.id == y.id
        assert np.array_equal(x.image, y.image)
        assert np.array_equal(x.mask, y.mask)
    c = generate_phantom(3, (32, 32), seed=6)
    assert not np.array_equal(a[0].mask, c[0].mask)


def test_generated_sample_shapes(phantoms):
    """Test raster shapes, dtypes and value ranges."""
    for sample in phantoms:
        assert sample.image.shape == (1, 32, 32)
        assert sample.image.dtype == np.float32
        assert 0.0 <= sample.image.min() and sample.image.max() <= 1.0
        assert sample.mask.dtype == np.uint8
        assert not sample.corrupted
        assert np.array_equal(sample.mask, sample.clean_mask)


def test_every_class_present(phantoms):
    """Test that each structure covers at least 16 pixels."""
    for sample in phantoms:
        counts = np.bincount(sample.mask.ravel(), minlength=4)
        assert counts.min() >= 16, sample.id


def test_ring_is_dilated_cavity(phantoms):
    """Test that the myocardium is exactly the dilated cavity minus the cavity."""
    for sample in phantoms:
        lv = sample.mask == 1
        ring = sample.mask == 2
        matches = [
            np.array_equal(ring, dilate(lv, StructuringElement(r)) & ~lv) for r in (2, 3, 4)
        ]
        assert any(matches), sample.id


def test_blood_pool_darker_than_myocardium(phantoms):
    """Test the intensity contrast between cavity and wall."""
    lv = np.concatenate([s.image[0][s.mask == 1] for s in phantoms])
    lvm = np.concatenate([s.image[0][s.mask == 2] for s in phantoms])
    assert lv.mean() < lvm.mean()


def test_generation_rejects_bad_extent():
    """Test that non power-of-two extents are rejected."""
    with pytest.raises(ConfigError):
        generate_phantom(2, (48, 48), seed=0)
    with pytest.raises(ConfigError):
        generate_phantom(0, (32, 32), seed=0)


def test_split_counts():
    """Test floor counts for val/test with the remainder going to train."""
    assert split_counts(10, (0.8, 0.1, 0.1)) == (8, 1, 1)
    assert split_counts(500, (0.8, 0.1, 0.1)) == (400, 50, 50)


def test_split_is_disjoint_and_seeded():
    """Test that splits partition the ids and depend only on the seed."""
    samples = [SimpleNamespace(id=f"s{i:02d}") for i in range(10)]
    manifest = split_dataset(samples, (0.8, 0.1, 0.1), seed=3)
    assert (len(manifest.train), len(manifest.val), len(manifest.test)) == (8, 1, 1)
    assert sorted(manifest.all_ids) == sorted(s.id for s in samples)
    again = split_dataset(list(reversed(samples)), (0.8, 0.1, 0.1), seed=3)
    assert again.splits == manifest.splits
    assert manifest.split_of(manifest.test[0]) == "test"


def test_split_rejects_empty_partition():
    """Test that too few samples for a split is an error."""
    samples = [SimpleNamespace(id=f"s{i}") for i in range(3)]
    with pytest.raises(DataError, match="empty split"):
        split_dataset(samples, (0.8, 0.1, 0.1), seed=0)


def test_manifest_rejects_overlap():
    """Test that an id in two splits is rejected."""
    with pytest.raises(DataError, match="both"):
        DatasetManifest(splits={"train": ["a"], "val": ["a"], "test": []}, seed=0)


def test_sample_validation():
    """Test that an unflagged sample must carry its clean mask."""
    image = np.zeros((1, 4, 4), dtype=np.float32)
    clean = np.zeros((4, 4), dtype=np.uint8)
    noisy = clean.copy()
    noisy[0, 0] = 1
    with pytest.raises(DataError):
        LabeledSample(id="x", image=image, mask=noisy, clean_mask=clean)
    sample = LabeledSample(id="x", image=image, mask=noisy, clean_mask=clean, corrupted=True)
    assert sample.shape == (4, 4)
    with pytest.raises(DataError):
        LabeledSample(id="y", image=image, mask=np.zeros((2, 2), np.uint8), clean_mask=clean)


def test_with_mask_flags_corruption():
    """Test that replacing the mask sets the corruption flag."""
    clean = np.zeros((4, 4), dtype=np.uint8)
    sample = LabeledSample(
        id="x", image=np.zeros((1, 4, 4), np.float32), mask=clean.copy(), clean_mask=clean
    )
    edited = clean.copy()
    edited[1, 1] = 3
    out = sample.with_mask(edited)
    assert out.corrupted
    assert not sample.corrupted
    assert np.array_equal(out.clean_mask, clean)


def test_pgm_round_trip(temp_dir):
    """Test that PGM rasters survive a write/read cycle with a P5 header."""
    raster = np.arange(64, dtype=np.uint8).reshape(8, 8)
    path = write_pgm(temp_dir / "r.pgm", raster)
    assert path.read_bytes().startswith(b"P5")
    pixels, offset = read_pgm(path)
    assert np.array_equal(pixels, raster)
    assert offset == path.stat().st_size - raster.size


def test_mask_value_out_of_range(temp_dir):
    """Test that a class index of 7 is reported with its pixel and byte offset."""
    raster = np.zeros((4, 4), dtype=np.uint8)
    raster[1, 2] = 7
    path = write_pgm(temp_dir / "m.pgm", raster)
    header = path.stat().st_size - raster.size
    with pytest.raises(DataError, match=f"row 1, col 2\\), byte offset {header + 6}"):
        read_mask(path)


def test_pgm_empty_and_malformed(temp_dir):
    """Test header errors for empty and non-P5 files."""
    empty = temp_dir / "empty.pgm"
    empty.write_bytes(b"")
    with pytest.raises(DataError, match="empty file"):
        read_pgm(empty)
    wrong = temp_dir / "wrong.pgm"
    wrong.write_bytes(b"P2\n2 2\n255\n0 0 0 0\n")
    with pytest.raises(DataError, match="magic"):
        read_pgm(wrong)
    with pytest.raises(DataError, match="not found"):
        read_pgm(temp_dir / "absent.pgm")


def test_dataset_round_trip(temp_dir, phantoms, manifest):
    """Test that saving and loading preserves rasters, splits and the digest."""
    save_dataset(phantoms, manifest, temp_dir)
    assert (temp_dir / "manifest.jsonl").exists()
    assert (temp_dir / "dataset.json").exists()
    loaded, loaded_manifest = load_dataset(temp_dir)
    assert loaded_manifest.splits == manifest.splits
    assert dataset_digest(loaded, loaded_manifest) == dataset_digest(phantoms, manifest)
    by_id = {s.id: s for s in loaded}
    for sample in phantoms:
        assert np.array_equal(by_id[sample.id].mask, sample.mask)
        assert np.array_equal(by_id[sample.id].image, sample.image)


def test_load_dataset_missing_manifest(temp_dir):
    """Test that a directory without a manifest is a data error."""
    with pytest.raises(DataError, match="manifest"):
        load_dataset(temp_dir)


def test_digest_tracks_labels(phantoms, manifest):
    """Test that changing one label changes the digest."""
    before = dataset_digest(phantoms, manifest)
    mask = phantoms[0].clean_mask.copy()
    mask[mask == 2] = 1
    edited = [phantoms[0].with_mask(mask)] + phantoms[1:]
    assert dataset_digest(edited, manifest) != before
