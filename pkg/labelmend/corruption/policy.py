"""Random and systematic corruption policies and dataset-level application."""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
import logging

import numpy as np

from ..config import FOREGROUND_CLASSES, CorruptionKind, CorruptionMode, CorruptionSpec
from ..data.sample import LabeledSample
from ..errors import DataError
from .operators import (
    BoundaryOp,
    boundary_distortion,
    incomplete_label,
    merged_labels,
    round_half_up,
)

logger = logging.getLogger(__name__)

# Stream tags keep subset selection and per-sample edits on independent generators
_SELECT_STREAM = 0
_EDIT_STREAM = 1

# Draws per sample before moving on to the next candidate
MAX_EDIT_DRAWS = 8


@dataclass(frozen=True)
class CorruptionEdit:
    """A concrete per-sample edit drawn from a policy."""
    kind: CorruptionKind
    classes: Tuple[int, ...] = ()
    fraction: Optional[float] = None
    angle: Optional[float] = None
    op: Optional[BoundaryOp] = None
    radius: Optional[int] = None
    source: Optional[int] = None
    target: Optional[int] = None

    def apply(self, mask: np.ndarray) -> np.ndarray:
        if self.kind is CorruptionKind.INCOMPLETE:
            out = mask
            for cls in self.classes:
                out = incomplete_label(out, cls, self.fraction, angle=self.angle)
            return out
        if self.kind is CorruptionKind.BOUNDARY:
            out = mask
            for cls in self.classes:
                out = boundary_distortion(out, cls, self.op, self.radius)
            return out
        if not (mask == self.source).any():
            # Re-merging an absent class is the identity at dataset level
            return mask.copy()
        return merged_labels(mask, self.source, self.target)


def systematic_policy(
    kind: CorruptionKind, spec: CorruptionSpec, rng: np.random.Generator
) -> CorruptionEdit:
    """Fixed edit per kind: LV partially unlabelled, every structure eroded, LVM merged into LV."""
    kind = CorruptionKind(kind)
    if kind is CorruptionKind.INCOMPLETE:
        return CorruptionEdit(
            kind=kind,
            classes=(1,),
            fraction=spec.systematic_removal,
            angle=float(rng.uniform(0.0, 2.0 * np.pi)),
        )
    if kind is CorruptionKind.BOUNDARY:
        return CorruptionEdit(
            kind=kind,
            classes=FOREGROUND_CLASSES,
            op=BoundaryOp.ERODE,
            radius=spec.systematic_radius,
        )
    return CorruptionEdit(kind=kind, source=2, target=1)


def random_policy(
    kind: CorruptionKind,
    spec: CorruptionSpec,
    rng: np.random.Generator,
    present: Sequence[int] = FOREGROUND_CLASSES,
) -> CorruptionEdit:
    """Per-sample draw giving every present foreground structure an equal chance."""
    kind = CorruptionKind(kind)
    present = [c for c in FOREGROUND_CLASSES if c in present]
    needed = 2 if kind is CorruptionKind.MERGED else 1
    if len(present) < needed:
        raise DataError(
            f"{kind.value} corruption needs {needed} foreground structure(s), "
            f"mask has {present or 'none'}"
        )
    if kind is CorruptionKind.INCOMPLETE:
        lo, hi = spec.removal_range
        return CorruptionEdit(
            kind=kind,
            classes=(int(rng.choice(present)),),
            fraction=float(rng.uniform(lo, hi)),
            angle=float(rng.uniform(0.0, 2.0 * np.pi)),
        )
    if kind is CorruptionKind.BOUNDARY:
        return CorruptionEdit(
            kind=kind,
            classes=(int(rng.choice(present)),),
            op=BoundaryOp.DILATE if rng.random() < 0.5 else BoundaryOp.ERODE,
            radius=int(rng.choice(spec.radius_choices)),
        )
    source, target = rng.choice(present, size=2, replace=False)
    return CorruptionEdit(kind=kind, source=int(source), target=int(target))


def draw_edit(spec: CorruptionSpec, mask: np.ndarray, rng: np.random.Generator) -> CorruptionEdit:
    if spec.mode is CorruptionMode.SYSTEMATIC:
        return systematic_policy(spec.kind, spec, rng)
    present = [c for c in FOREGROUND_CLASSES if (mask == c).any()]
    return random_policy(spec.kind, spec, rng, present=present)


def corrupted_count(proportion: float, eligible: int) -> int:
    """Round-half-up count of samples to corrupt."""
    return round_half_up(proportion * eligible)


def _try_corrupt(
    sample: LabeledSample, spec: CorruptionSpec, rng: np.random.Generator
) -> Optional[LabeledSample]:
    """Corrupted copy of ``sample``, or None when no drawn edit changes its mask."""
    for _ in range(MAX_EDIT_DRAWS):
        try:
            edit = draw_edit(spec, sample.clean_mask, rng)
            mask = edit.apply(sample.clean_mask)
        except DataError as e:
            logger.warning(f"Sample {sample.id} cannot take a {spec.kind.value} edit: {e}")
            return None
        if not np.array_equal(mask, sample.clean_mask):
            logger.debug(f"Corrupted {sample.id}: {edit}")
            return sample.with_mask(mask, kind=spec.kind)
        if spec.mode is CorruptionMode.SYSTEMATIC:
            break
    logger.warning(f"No {spec.kind.value} edit changed sample {sample.id}; trying the next one")
    return None


def corrupt_dataset(
    samples: Sequence[LabeledSample],
    spec: CorruptionSpec,
    eligible_ids: Iterable[str],
) -> Tuple[List[LabeledSample], List[str]]:
    """Corrupt a seeded subset of the eligible (train + validation) samples.

    Candidates are visited in a seeded order until exactly ``corrupted_count``
    masks have changed; a sample whose mask no edit can change is passed over.
    Returns new sample objects in the input order plus the sorted corrupted ids.
    Samples outside ``eligible_ids`` (the test split) are returned untouched.
    """
    eligible = sorted(set(eligible_ids))
    k = corrupted_count(spec.proportion, len(eligible))
    if spec.proportion > 0 and k == 0:
        logger.warning(
            f"Corruption proportion {spec.proportion} of {len(eligible)} eligible samples "
            "rounds to zero; dataset left clean"
        )
    if k == 0:
        return list(samples), []

    by_id = {s.id: s for s in samples}
    missing = [sid for sid in eligible if sid not in by_id]
    if missing:
        raise DataError(f"eligible ids not among the samples: {missing[:5]}")

    order = np.random.default_rng([spec.seed, _SELECT_STREAM]).permutation(len(eligible))
    edited: Dict[str, LabeledSample] = {}
    skipped: List[str] = []
    for i in order:
        if len(edited) == k:
            break
        sample = by_id[eligible[i]]
        rng = np.random.default_rng([spec.seed, _EDIT_STREAM, int(i)])
        result = _try_corrupt(sample, spec, rng)
        if result is None:
            skipped.append(sample.id)
        else:
            edited[sample.id] = result
    if len(edited) < k:
        raise DataError(
            f"only {len(edited)} of {k} requested samples could be corrupted with "
            f"{spec.mode.value} {spec.kind.value} edits; unusable: {sorted(skipped)[:5]}"
        )

    out = [edited.get(s.id, s) for s in samples]
    logger.info(
        f"Corrupted {k}/{len(eligible)} eligible samples "
        f"({spec.mode.value} {spec.kind.value}, proportion {spec.proportion})"
    )
    return out, sorted(edited)
