"""Tests for prediction histories, pseudo-labels and refurbishment."""

import numpy as np
import pytest

from labelmend.config import ScheduleConfig
from labelmend.corruption import incomplete_label
from labelmend.errors import ConfigError, DataError, ShapeError
from labelmend.numerics import one_hot
from labelmend.refurbish import (
    HistoryStore,
    PredictionHistory,
    RefurbishmentLog,
    dump_masks,
    pseudo_label,
    refurbish_step,
)


@pytest.fixture
def schedule():
    return ScheduleConfig(warm_up=2, interval=2, window_t=2, history_length=2)


@pytest.fixture
def trainset(phantoms, manifest):
    """Training split with the first sample's LV half unlabelled."""
    samples = {s.id: s for s in manifest.select(phantoms, "train")}
    first = manifest.train[0]
    mask = incomplete_label(samples[first].clean_mask, 1, 0.5, angle=0.0)
    samples[first] = samples[first].with_mask(mask)
    return samples


def _perfect_histories(trainset, epochs, length=2):
    """Histories whose every map is the one-hot clean mask."""
    store = HistoryStore(length=length)
    for epoch in epochs:
        for sid, sample in trainset.items():
            store.record(sid, epoch, one_hot(sample.clean_mask, 4).astype(np.float32))
    return store


def _pixel(p0: float) -> np.ndarray:
    return np.array([p0, 1.0 - p0], dtype=np.float32).reshape(2, 1, 1)


def test_pseudo_label_identical_maps():
    """Test that five identical maps average to themselves."""
    history = PredictionHistory("a", 5, (2, 1, 1))
    for epoch in range(1, 6):
        history.append(epoch, _pixel(0.7))
    soft, hard = pseudo_label(history, 5, length=5)
    assert soft[:, 0, 0] == pytest.approx([0.7, 0.3], abs=1e-6)
    assert hard[0, 0] == 0


def test_pseudo_label_majority():
    """Test that (1,0) three times and (0,1) twice gives (0.6, 0.4) and class 0."""
    history = PredictionHistory("a", 5, (2, 1, 1))
    for epoch, p0 in enumerate([1.0, 1.0, 1.0, 0.0, 0.0], start=1):
        history.append(epoch, _pixel(p0))
    soft, hard = pseudo_label(history, 5, length=5)
    assert soft[:, 0, 0] == pytest.approx([0.6, 0.4])
    assert hard[0, 0] == 0
    assert hard.dtype == np.uint8


def test_pseudo_label_permutation_invariant():
    """Test that the order of the maps in the window does not matter."""
    values = [0.9, 0.2, 0.55, 0.4, 0.1]
    results = []
    for order in (values, values[::-1], sorted(values)):
        history = PredictionHistory("a", 5, (2, 1, 1))
        for epoch, p0 in enumerate(order, start=1):
            history.append(epoch, _pixel(p0))
        results.append(pseudo_label(history, 5, length=5))
    for soft, hard in results[1:]:
        assert np.allclose(soft, results[0][0])
        assert np.array_equal(hard, results[0][1])


def test_pseudo_label_tie_goes_to_lowest_class():
    """Test that an exact tie picks the lower class index."""
    history = PredictionHistory("a", 2, (2, 1, 1))
    history.append(1, _pixel(0.5))
    _, hard = pseudo_label(history, 1, length=1)
    assert hard[0, 0] == 0


def test_history_keeps_newest_maps():
    """Test the ring buffer capacity and the incomplete-window error."""
    history = PredictionHistory("a", 2, (2, 1, 1))
    for epoch in range(1, 5):
        history.append(epoch, _pixel(0.5))
    assert history.epochs == [3, 4]
    with pytest.raises(DataError, match="incomplete prediction history"):
        history.window(4, 3)
    with pytest.raises(ValueError):
        history.append(4, _pixel(0.5))


def test_history_rejects_non_probability():
    """Test that maps not summing to one are rejected."""
    history = PredictionHistory("a", 2, (2, 1, 1))
    with pytest.raises(ValueError, match="probability"):
        history.append(1, np.full((2, 1, 1), 0.6, dtype=np.float32))


def test_history_store_shapes():
    """Test shape checks on recorded predictions."""
    store = HistoryStore(length=2)
    store.record("a", 1, np.full((2, 4, 4), 0.5, dtype=np.float32))
    with pytest.raises(ShapeError):
        store.record("a", 2, np.full((2, 8, 8), 0.5, dtype=np.float32))
    with pytest.raises(ShapeError):
        store.record("b", 1, np.full((4, 4), 0.5, dtype=np.float32))
    assert "a" in store and len(store) == 1


def test_history_store_pool_cap():
    """Test that pooled maps are stored small and returned at full resolution."""
    store = HistoryStore(length=1, pool_cap=1024)
    mask = np.zeros((32, 32), dtype=np.uint8)
    mask[:16] = 2
    store.record("a", 1, one_hot(mask, 4).astype(np.float32))
    assert store.downsampled
    held = store.get("a").maps[-1][1]
    assert held.shape == (4, 16, 16)
    soft, hard = pseudo_label(store.get("a"), 1, length=1)
    assert soft.shape == (4, 32, 32)
    assert np.array_equal(hard, mask)


def test_refurbish_restores_clean_label(trainset, schedule):
    """Test that a perfect history replaces the corrupted mask with the clean one."""
    sid = next(iter(trainset))
    histories = _perfect_histories(trainset, epochs=(3, 4))
    updated, event = refurbish_step(trainset, [sid], histories, 4, schedule)
    sample = updated[sid]
    assert sample.refurbished
    assert sample.corrupted
    assert np.array_equal(sample.mask, sample.clean_mask)
    assert not trainset[sid].refurbished
    label = event.labels[0]
    assert label.corrupted
    assert label.dice_before < 1.0
    assert label.dice_after == pytest.approx(1.0)
    assert event.flagged == [sid]
    assert event.corrupted_labels() == [label]
    for other in trainset:
        if other != sid:
            assert updated[other] is trainset[other]


def test_refurbish_empty_flag_set(trainset, schedule):
    """Test that nothing flagged leaves the training set as it was."""
    histories = _perfect_histories(trainset, epochs=(3, 4))
    updated, event = refurbish_step(trainset, [], histories, 4, schedule)
    assert event.labels == []
    assert all(updated[sid] is trainset[sid] for sid in trainset)


def test_refurbish_rejects_outside_training(trainset, schedule, manifest):
    """Test that a flagged validation sample is a data error."""
    histories = _perfect_histories(trainset, epochs=(3, 4))
    with pytest.raises(DataError, match="outside the training split"):
        refurbish_step(trainset, [manifest.val[0]], histories, 4, schedule)


def test_refurbish_rejects_non_event_epoch(trainset, schedule):
    """Test that refurbishing during warm-up or off-interval is a config error."""
    histories = _perfect_histories(trainset, epochs=(2, 3))
    with pytest.raises(ConfigError):
        refurbish_step(trainset, [next(iter(trainset))], histories, 3, schedule)
    with pytest.raises(ConfigError):
        refurbish_step(trainset, [next(iter(trainset))], histories, 2, schedule)


def test_refurbish_needs_history(trainset, schedule):
    """Test missing and incomplete histories."""
    sid = next(iter(trainset))
    with pytest.raises(DataError, match="no prediction history"):
        refurbish_step(trainset, [sid], HistoryStore(length=2), 4, schedule)
    partial = _perfect_histories(trainset, epochs=(4,))
    with pytest.raises(DataError, match="incomplete"):
        refurbish_step(trainset, [sid], partial, 4, schedule)


def test_refurbishment_log_round_trip(temp_dir, trainset, schedule):
    """Test that logged events read back unchanged."""
    sid = next(iter(trainset))
    histories = _perfect_histories(trainset, epochs=(3, 4, 5, 6))
    _, first = refurbish_step(trainset, [sid], histories, 6, schedule)
    path = temp_dir / "refurbish.jsonl"
    log = RefurbishmentLog(path)
    log.append(first)
    log.append(first)
    loaded = RefurbishmentLog.load(path)
    assert len(path.read_text().splitlines()) == 2
    assert [e.to_dict() for e in loaded.events] == [first.to_dict(), first.to_dict()]
    assert RefurbishmentLog.load(temp_dir / "absent.jsonl").events == []


def test_dump_masks(temp_dir, trainset, schedule):
    """Test that only refurbished masks are written."""
    sid = next(iter(trainset))
    histories = _perfect_histories(trainset, epochs=(3, 4))
    updated, _ = refurbish_step(trainset, [sid], histories, 4, schedule)
    paths = dump_masks(updated.values(), temp_dir)
    assert [p.name for p in paths] == [f"{sid}.pgm"]
