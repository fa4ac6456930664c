"""Train/validation/test partitions and the dataset manifest."""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DataError
from .sample import LabeledSample

SPLITS = ("train", "val", "test")


@dataclass
class ManifestRecord:
    """One JSON-lines manifest row; paths are relative to the dataset root."""
    id: str
    image_path: str
    mask_path: str
    clean_mask_path: str
    split: str
    corrupted: bool = False
    corruption_kind: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class DatasetManifest:
    """Split assignment plus the generator settings that produced the dataset."""
    splits: Dict[str, List[str]]
    seed: int
    params: Dict[str, Any] = field(default_factory=dict)
    records: Dict[str, ManifestRecord] = field(default_factory=dict)

    def __post_init__(self) -> None:
        seen: Dict[str, str] = {}
        for name in SPLITS:
            for sid in self.splits.get(name, []):
                if sid in seen:
                    raise DataError(f"sample {sid} assigned to both {seen[sid]} and {name}")
                seen[sid] = name

    @property
    def train(self) -> List[str]:
        return self.splits["train"]

    @property
    def val(self) -> List[str]:
        return self.splits["val"]

    @property
    def test(self) -> List[str]:
        return self.splits["test"]

    @property
    def all_ids(self) -> List[str]:
        return [sid for name in SPLITS for sid in self.splits[name]]

    def split_of(self, sample_id: str) -> str:
        for name in SPLITS:
            if sample_id in self.splits[name]:
                return name
        raise DataError(f"sample {sample_id} is not in the manifest")

    def eligible_for_corruption(self) -> List[str]:
        return self.train + self.val

    def select(self, samples: Sequence[LabeledSample], split: str) -> List[LabeledSample]:
        """Samples of ``split`` in manifest order."""
        by_id = {s.id: s for s in samples}
        return [by_id[sid] for sid in self.splits[split]]


def split_counts(n: int, fractions: Tuple[float, float, float]) -> Tuple[int, int, int]:
    """Floor-based counts for val and test; the remainder goes to train."""
    n_val = int(np.floor(fractions[1] * n + 1e-9))
    n_test = int(np.floor(fractions[2] * n + 1e-9))
    return n - n_val - n_test, n_val, n_test


def split_dataset(
    samples: Iterable[LabeledSample],
    fractions: Tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
    params: Optional[Dict[str, Any]] = None,
) -> DatasetManifest:
    """Seeded shuffle of the sorted ids followed by a contiguous train/val/test cut."""
    if any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise DataError(f"split fractions must be nonnegative and sum to 1, got {fractions}")
    ids = sorted(s.id for s in samples)
    n_train, n_val, n_test = split_counts(len(ids), fractions)
    if min(n_train, n_val, n_test) <= 0:
        raise DataError(
            f"{len(ids)} samples with fractions {fractions} leave an empty split "
            f"({n_train}/{n_val}/{n_test})"
        )
    order = np.random.default_rng(seed).permutation(len(ids))
    shuffled = [ids[i] for i in order]
    return DatasetManifest(
        splits={
            "train": shuffled[:n_train],
            "val": shuffled[n_train : n_train + n_val],
            "test": shuffled[n_train + n_val :],
        },
        seed=seed,
        params=dict(params or {}),
    )
