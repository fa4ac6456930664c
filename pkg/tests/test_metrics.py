"""Tests for Dice, the signed-rank test and model evaluation."""

import itertools

import numpy as np
import pytest

from labelmend.config import ArchitectureDescriptor
from labelmend.data import LabeledSample
from labelmend.errors import DataError, ShapeError
from labelmend.metrics import (
    COLUMNS,
    dice,
    dice_vector,
    evaluate_model,
    evaluate_predictions,
    exact_p_value,
    normal_p_value,
    summarize,
    wilcoxon_signed_rank,
)
from labelmend.model import Checkpoint, init_model


def test_dice_half_overlap():
    """Test |A| = |B| = 4 with |A and B| = 2 gives 0.5."""
    a = np.zeros((4, 4), dtype=np.uint8)
    b = np.zeros((4, 4), dtype=np.uint8)
    a[0, :] = 1
    b[0, :2] = 1
    b[1, :2] = 1
    assert dice(a, b, 1) == pytest.approx(0.5)


def test_dice_edge_cases():
    """Test identical, disjoint and both-empty masks."""
    a = np.zeros((3, 3), dtype=np.uint8)
    a[1, 1] = 2
    b = np.zeros((3, 3), dtype=np.uint8)
    b[0, 0] = 2
    assert dice(a, a, 2) == 1.0
    assert dice(a, b, 2) == 0.0
    assert dice(a, b, 3) == 1.0
    with pytest.raises(ShapeError):
        dice(a, np.zeros((2, 2), dtype=np.uint8), 1)


def test_dice_vector_row():
    """Test the per-structure row and its mean."""
    a = np.array([[1, 2], [3, 0]], dtype=np.uint8)
    b = np.array([[1, 2], [0, 0]], dtype=np.uint8)
    row = dice_vector(a, b).as_row()
    assert row == {"LV": 1.0, "LVM": 1.0, "LA": 0.0, "mean": pytest.approx(2 / 3)}


def test_wilcoxon_hand_case():
    """Test differences (1, 2, 3, -1, 4): tied ranks average and W = 1.5."""
    result = wilcoxon_signed_rank([1, 2, 3, -1, 4])
    assert result.w_minus == pytest.approx(1.5)
    assert result.w_plus == pytest.approx(13.5)
    assert result.statistic == pytest.approx(1.5)
    assert result.n_effective == 5
    assert result.method == "exact"


def test_wilcoxon_all_positive():
    """Test five positive differences give the exact two-sided p of 1/16."""
    result = wilcoxon_signed_rank([0.1, 0.2, 0.3, 0.4, 0.5])
    assert result.statistic == 0.0
    assert result.p_value == pytest.approx(0.0625)
    assert not result.significant


def test_wilcoxon_negation_symmetry(rng):
    """Test that negating every difference leaves W and p unchanged."""
    d = rng.standard_normal(9)
    a = wilcoxon_signed_rank(d)
    b = wilcoxon_signed_rank(-d)
    assert a.statistic == pytest.approx(b.statistic)
    assert a.p_value == pytest.approx(b.p_value)
    assert a.w_plus == pytest.approx(b.w_minus)


def test_wilcoxon_drops_zeros():
    """Test that zero differences do not count toward n."""
    result = wilcoxon_signed_rank([0, 0, 1, 2, 3, 4, 5])
    assert result.n_effective == 5
    assert result.p_value == pytest.approx(0.0625)


def test_wilcoxon_underpowered():
    """Test that fewer than five nonzero differences report p = 1."""
    for diffs in ([], [0, 0], [1, -2, 3, 4]):
        result = wilcoxon_signed_rank(diffs)
        assert result.method == "underpowered"
        assert result.p_value == 1.0
        assert not result.significant
        assert result.underpowered


def test_exact_p_matches_enumeration(rng):
    """Test the exact p against a direct sign enumeration for n <= 10."""
    for n in range(5, 11):
        d = np.round(rng.standard_normal(n), 1)
        d[d == 0] = 0.05
        result = wilcoxon_signed_rank(d)
        ranks = np.argsort(np.argsort(np.abs(d))) + 1.0
        ranks = np.array([np.mean(ranks[np.abs(d) == abs(x)]) for x in d])
        hits = 0
        for signs in itertools.product((0, 1), repeat=n):
            w_plus = float(np.dot(signs, ranks))
            if min(w_plus, ranks.sum() - w_plus) <= result.statistic + 1e-9:
                hits += 1
        assert result.p_value == pytest.approx(hits / 2**n)


def test_normal_close_to_exact():
    """Test that the normal approximation tracks the exact p at n = 12."""
    ranks = np.arange(1, 13, dtype=np.float64)
    for statistic in (8.0, 13.0, 20.0, 30.0, 39.0):
        exact = exact_p_value(ranks, statistic)
        approx = normal_p_value(ranks, statistic)
        assert abs(exact - approx) < 0.02, statistic


def test_wilcoxon_uses_normal_above_twelve(rng):
    """Test the switch to the normal approximation."""
    result = wilcoxon_signed_rank(rng.standard_normal(30) + 2.0)
    assert result.method == "normal"
    assert result.significant


def test_summarize():
    """Test box-plot statistics of a small column."""
    stats = summarize([1.0, 2.0, 3.0, 4.0, 5.0])
    assert stats["mean"] == 3.0
    assert stats["median"] == 3.0
    assert stats["q1"] == 2.0 and stats["q3"] == 4.0
    assert stats["min"] == 1.0 and stats["max"] == 5.0
    assert stats["std"] == pytest.approx(np.sqrt(2.0))


def test_evaluate_perfect_predictor(phantoms):
    """Test that predicting the clean masks scores Dice 1 everywhere."""
    evaluation = evaluate_predictions({s.id: s.clean_mask for s in phantoms}, phantoms)
    for name in COLUMNS:
        assert evaluation.summary()[name]["min"] == 1.0


def test_evaluate_background_predictor(phantoms):
    """Test that an all-background prediction scores Dice 0 on every structure."""
    zeros = {s.id: np.zeros_like(s.clean_mask) for s in phantoms}
    evaluation = evaluate_predictions(zeros, phantoms)
    assert evaluation.summary()["mean"]["max"] == 0.0


def test_evaluate_uses_clean_masks(phantoms):
    """Test that scoring ignores a corrupted training mask."""
    mask = phantoms[0].clean_mask.copy()
    mask[mask == 2] = 1
    corrupted = [phantoms[0].with_mask(mask)]
    evaluation = evaluate_predictions({phantoms[0].id: phantoms[0].clean_mask}, corrupted)
    assert evaluation.per_sample[phantoms[0].id].mean == 1.0


def test_evaluate_outliers():
    """Test the below-Q1-1.5IQR rule on one column."""
    good = np.zeros((2, 2), dtype=np.uint8)
    good[0, 0], good[0, 1], good[1, 0] = 1, 2, 3
    samples = {f"s{i}": good for i in range(6)}
    predictions = dict(samples)
    predictions["s5"] = np.zeros((2, 2), dtype=np.uint8)
    rows = [
        LabeledSample(id=sid, image=np.zeros((1, 2, 2), np.float32), mask=m, clean_mask=m)
        for sid, m in samples.items()
    ]
    evaluation = evaluate_predictions(predictions, rows)
    assert evaluation.outliers("mean") == ["s5"]


def test_evaluate_model_files(temp_dir, phantoms):
    """Test per-sample rows and files for an untrained model."""
    descriptor = ArchitectureDescriptor(levels=1, base_channels=4)
    evaluation = evaluate_model(Checkpoint(init_model(descriptor, 0), 0, 0.0), phantoms[:3])
    rows = evaluation.rows()
    assert [r["id"] for r in rows] == sorted(s.id for s in phantoms[:3])
    assert all(0.0 <= r["mean"] <= 1.0 for r in rows)
    evaluation.write_csv(temp_dir / "test_dice.csv")
    header = (temp_dir / "test_dice.csv").read_text().splitlines()[0]
    assert header == "id,LV,LVM,LA,mean"
    evaluation.write_summary(temp_dir / "test_summary.json")
    assert (temp_dir / "test_summary.json").exists()
    with pytest.raises(DataError):
        evaluate_model(init_model(descriptor, 0), [])
