"""Test-split evaluation against clean masks, with box-plot summaries."""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Union
import csv
import json
import logging

import numpy as np

from ..config import CLASS_NAMES, FOREGROUND_CLASSES
from ..data.sample import LabeledSample
from ..errors import DataError
from ..model import Checkpoint, ModelParams, predict_mask
from .dice import DiceVector, dice_vector

logger = logging.getLogger(__name__)

COLUMNS = [CLASS_NAMES[c] for c in FOREGROUND_CLASSES] + ["mean"]
EVAL_BATCH = 16


def summarize(values: Sequence[float]) -> Dict[str, float]:
    """Mean, std, quartiles and whisker-free extremes of one Dice column."""
    arr = np.asarray(values, dtype=np.float64)
    q1, median, q3 = np.quantile(arr, [0.25, 0.5, 0.75], method="linear")
    return {
        "mean": float(arr.mean()),
        "std": float(arr.std()),
        "min": float(arr.min()),
        "q1": float(q1),
        "median": float(median),
        "q3": float(q3),
        "max": float(arr.max()),
    }


@dataclass
class Evaluation:
    """Per-sample Dice vectors of one model on one split."""
    per_sample: Dict[str, DiceVector]

    def column(self, name: str) -> List[float]:
        return [self.per_sample[sid].as_row()[name] for sid in sorted(self.per_sample)]

    def summary(self) -> Dict[str, Dict[str, float]]:
        return {name: summarize(self.column(name)) for name in COLUMNS}

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {"id": sid, **self.per_sample[sid].as_row()} for sid in sorted(self.per_sample)
        ]

    def outliers(self, column: str = "mean") -> List[str]:
        """Samples scoring below Q1 - 1.5 * IQR of ``column``."""
        stats = summarize(self.column(column))
        floor = stats["q1"] - 1.5 * (stats["q3"] - stats["q1"])
        return [
            sid for sid in sorted(self.per_sample)
            if self.per_sample[sid].as_row()[column] < floor
        ]

    def write_csv(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=["id"] + COLUMNS, lineterminator="\n")
            writer.writeheader()
            for row in self.rows():
                writer.writerow(
                    {k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()}
                )
        return path

    def write_summary(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")
        return path


def evaluate_predictions(
    predictions: Mapping[str, np.ndarray], samples: Sequence[LabeledSample]
) -> Evaluation:
    if not samples:
        raise DataError("Cannot evaluate on an empty split")
    return Evaluation({s.id: dice_vector(predictions[s.id], s.clean_mask) for s in samples})


def evaluate_model(
    model: Union[Checkpoint, ModelParams], samples: Sequence[LabeledSample]
) -> Evaluation:
    """Dice of the model's predictions against each sample's clean mask."""
    params = model.params if isinstance(model, Checkpoint) else model
    if not samples:
        raise DataError("Cannot evaluate on an empty split")
    predictions: Dict[str, np.ndarray] = {}
    for start in range(0, len(samples), EVAL_BATCH):
        batch = samples[start:start + EVAL_BATCH]
        masks = predict_mask(params, np.stack([s.image for s in batch]))
        predictions.update({s.id: m for s, m in zip(batch, masks)})
    evaluation = evaluate_predictions(predictions, samples)
    logger.info(
        f"Evaluated {len(samples)} samples: mean foreground Dice "
        f"{evaluation.summary()['mean']['mean']:.4f}"
    )
    return evaluation
