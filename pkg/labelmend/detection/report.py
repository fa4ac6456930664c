"""Detection quality against planted corruption flags."""

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional
import csv
import json
import logging

logger = logging.getLogger(__name__)


@dataclass
class DetectionEntry:
    sample_id: str
    score: Optional[float]
    flagged: bool
    truly_corrupted: bool


@dataclass
class DetectionReport:
    """Per-sample flags plus confusion-derived accuracy, sensitivity and specificity."""
    entries: List[DetectionEntry]
    threshold: Optional[float]
    tp: int
    tn: int
    fp: int
    fn: int
    accuracy: float
    sensitivity: float
    specificity: float
    epoch: Optional[int] = None
    detector: Optional[str] = None
    downsampled: bool = False
    pool_cap: Optional[int] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def summary(self) -> Dict[str, Any]:
        return {
            "detector": self.detector,
            "epoch": self.epoch,
            "threshold": self.threshold,
            "accuracy": self.accuracy,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "tp": self.tp,
            "tn": self.tn,
            "fp": self.fp,
            "fn": self.fn,
            "num_samples": len(self.entries),
            "downsampled": self.downsampled,
            "pool_cap": self.pool_cap,
            **self.extra,
        }

    def to_dict(self) -> Dict[str, Any]:
        data = self.summary()
        data["entries"] = [asdict(e) for e in self.entries]
        return data

    def write_csv(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["id", "score", "flagged", "truly_corrupted"])
            for e in self.entries:
                score = "" if e.score is None else repr(float(e.score))
                writer.writerow([e.sample_id, score, int(e.flagged), int(e.truly_corrupted)])
        return path

    def write_summary(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")
        return path

    def save(self, directory: Path, stem: str = "detection") -> None:
        self.write_csv(directory / f"{stem}.csv")
        self.write_summary(directory / f"{stem}.json")
        logger.info(f"Wrote detection report {stem} to {directory}")


def score_detection(
    flagged: Iterable[str],
    corrupted: Iterable[str],
    all_ids: Iterable[str],
    scores: Optional[Mapping[str, float]] = None,
    threshold: Optional[float] = None,
    epoch: Optional[int] = None,
    detector: Optional[str] = None,
    downsampled: bool = False,
    pool_cap: Optional[int] = None,
) -> DetectionReport:
    """Confusion counts of ``flagged`` against ``corrupted`` over ``all_ids``.

    Sensitivity is 1 when nothing is corrupted; specificity is 1 when
    everything is.
    """
    ids = sorted(set(all_ids))
    flagged_set = set(flagged)
    corrupted_set = set(corrupted)
    universe = set(ids)
    if not flagged_set <= universe or not corrupted_set <= universe:
        stray = sorted((flagged_set | corrupted_set) - universe)
        logger.warning(f"Ignoring ids outside the scored population: {stray[:5]}")

    entries = []
    tp = tn = fp = fn = 0
    for sid in ids:
        is_flagged = sid in flagged_set
        is_corrupted = sid in corrupted_set
        if is_flagged and is_corrupted:
            tp += 1
        elif is_flagged:
            fp += 1
        elif is_corrupted:
            fn += 1
        else:
            tn += 1
        score = None if scores is None else scores.get(sid)
        entries.append(DetectionEntry(sid, score, is_flagged, is_corrupted))

    n = len(ids)
    accuracy = (tp + tn) / n if n else 1.0
    sensitivity = tp / (tp + fn) if tp + fn else 1.0
    specificity = tn / (tn + fp) if tn + fp else 1.0
    return DetectionReport(
        entries=entries,
        threshold=threshold,
        tp=tp,
        tn=tn,
        fp=fp,
        fn=fn,
        accuracy=accuracy,
        sensitivity=sensitivity,
        specificity=specificity,
        epoch=epoch,
        detector=detector,
        downsampled=downsampled,
        pool_cap=pool_cap,
    )
