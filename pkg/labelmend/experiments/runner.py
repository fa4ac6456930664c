"""Experiment arms and the three experiments built from them.

An arm is one training run: a dataset (generated or loaded), a corruption
setting, a pipeline (baseline or refurbished) and the detectors to score.
Arms are independent and rebuild their data from the config, so they can run
in separate processes.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple
import logging
import time

import numpy as np

from ..config import (
    CLASS_NAMES,
    FOREGROUND_CLASSES,
    CorruptionKind,
    CorruptionMode,
    ExperimentConfig,
)
from ..corruption import corrupt_dataset
from ..data import (
    DatasetManifest,
    LabeledSample,
    dataset_digest,
    generate_phantom,
    load_dataset,
    split_dataset,
)
from ..errors import ConfigError, DataError
from ..metrics import Evaluation, evaluate_model, foreground_dice, summarize, wilcoxon_signed_rank
from ..model import save_checkpoint
from ..refurbish import dump_masks
from ..training import LabelQualityHook, train
from .reports import ExperimentReport, write_table

logger = logging.getLogger(__name__)

EXP1_PROPORTIONS = [0.25]
EXP2_PROPORTIONS = [0.125, 0.25, 0.5]
EXP3_PROPORTIONS = [0.0, 0.125, 0.25, 0.5]
STRUCTURES = [CLASS_NAMES[c] for c in FOREGROUND_CLASSES] + ["mean"]


@dataclass
class PreparedData:
    samples: List[LabeledSample]
    manifest: DatasetManifest
    corrupted: List[str]
    digest: str


def prepare_data(config: ExperimentConfig, data_dir: Optional[Path] = None) -> PreparedData:
    """Generate (or load) the dataset, split it and apply the configured corruption."""
    if data_dir is not None:
        samples, manifest = load_dataset(data_dir)
    else:
        ds = config.dataset
        samples = generate_phantom(ds.n, (ds.height, ds.width), ds.seed)
        manifest = split_dataset(samples, ds.fractions, ds.seed, ds.model_dump(mode="json"))
    if config.corruption.proportion > 0:
        samples, _ = corrupt_dataset(samples, config.corruption, manifest.eligible_for_corruption())
    corrupted = sorted(s.id for s in samples if s.corrupted)
    return PreparedData(samples, manifest, corrupted, dataset_digest(samples, manifest))


@dataclass
class ArmSpec:
    """A picklable description of one training run."""
    name: str
    config: Dict[str, Any]
    pipeline: str = "baseline"
    detectors: List[str] = field(default_factory=list)
    tags: Dict[str, Any] = field(default_factory=dict)
    out_dir: Optional[str] = None
    data_dir: Optional[str] = None


@dataclass
class ArmOutcome:
    spec: ArmSpec
    digest: str
    best_epoch: int
    best_score: float
    trace_log: List[Dict[str, Any]]
    detection: Dict[str, List[Dict[str, Any]]]
    refurbishment: List[Dict[str, Any]]
    evaluation: Evaluation
    label_dice: Dict[str, Tuple[float, float]]  # corrupted train id -> (before, after)

    def summary(self) -> Dict[str, Any]:
        """JSON-ready arm record for ``report.json``."""
        return {
            "name": self.spec.name,
            "pipeline": self.spec.pipeline,
            "tags": self.spec.tags,
            "digest": self.digest,
            "best_epoch": self.best_epoch,
            "best_score": self.best_score,
            "trace_log": self.trace_log,
            "detection": self.detection,
            "refurbishment": self.refurbishment,
            "test_summary": self.evaluation.summary(),
        }


def arm_config(
    config: ExperimentConfig,
    seed: int,
    mode: CorruptionMode,
    kind: CorruptionKind,
    proportion: float,
) -> ExperimentConfig:
    derived = config.with_seed(seed)
    corruption = derived.corruption.model_copy(
        update={"mode": mode, "kind": kind, "proportion": proportion}
    )
    return derived.model_copy(update={"corruption": corruption})


def arm_name(tags: Dict[str, Any], pipeline: str) -> str:
    return (
        f"s{tags['seed']}-{tags['mode']}-{tags['kind']}-p{tags['proportion']:g}-{pipeline}"
    )


def run_arm(spec: ArmSpec) -> ArmOutcome:
    """Train one arm, evaluate its best checkpoint on the clean test split."""
    config = ExperimentConfig.from_dict(spec.config)
    data = prepare_data(config, Path(spec.data_dir) if spec.data_dir else None)
    out = Path(spec.out_dir) if spec.out_dir else None

    log_path = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        log_path = out / "refurbish.jsonl"
        log_path.unlink(missing_ok=True)

    hook = LabelQualityHook(
        config.schedule,
        detectors=spec.detectors or [config.detector],
        primary=config.detector,
        refurbish=spec.pipeline == "refurbished",
        log_path=log_path,
    )
    logger.info(f"Arm {spec.name}: {spec.pipeline}, dataset {data.digest[:12]}")
    result = train(data.samples, data.manifest, config, hooks=[hook])

    test = data.manifest.select(data.samples, "test")
    evaluation = evaluate_model(result.best, test)

    by_id = {s.id: s for s in data.samples}
    label_dice = {
        sid: (
            foreground_dice(by_id[sid].mask, by_id[sid].clean_mask),
            foreground_dice(result.trainset[sid].mask, by_id[sid].clean_mask),
        )
        for sid in data.manifest.train
        if by_id[sid].corrupted
    }

    detection = {
        name: [r.summary() for r in reports] for name, reports in hook.reports.items()
    }
    outcome = ArmOutcome(
        spec=spec,
        digest=data.digest,
        best_epoch=result.best.epoch,
        best_score=result.best.score,
        trace_log=[r.to_dict() for r in result.trace_log],
        detection=detection,
        refurbishment=[e.to_dict() for e in hook.events],
        evaluation=evaluation,
        label_dice=label_dice,
    )

    if out is not None:
        save_checkpoint(out / "best.npz", result.best)
        write_table(out / "trace_log.csv", outcome.trace_log)
        evaluation.write_csv(out / "test_dice.csv")
        evaluation.write_summary(out / "test_summary.json")
        for name, reports in hook.reports.items():
            for report in reports:
                report.save(out, f"detection_{name}_e{report.epoch}")
        dump_masks(result.trainset.values(), out / "refurbished_masks")
    return outcome


def run_arms(specs: Sequence[ArmSpec], jobs: int = 1) -> List[ArmOutcome]:
    """Run arms sequentially or across ``jobs`` processes; results keep input order."""
    if jobs <= 1 or len(specs) <= 1:
        return [run_arm(spec) for spec in specs]
    logger.info(f"Running {len(specs)} arms on {jobs} processes")
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_arm, specs))


def prepare_output(out_dir: Path, force: bool) -> None:
    if out_dir.exists() and any(out_dir.iterdir()) and not force:
        raise ConfigError(f"Output directory {out_dir} is not empty (use --force)")
    out_dir.mkdir(parents=True, exist_ok=True)


def _require_events(config: ExperimentConfig, experiment: str) -> None:
    first = config.schedule.first_event_epoch()
    if config.train.epochs < first:
        raise ConfigError(
            f"{experiment} needs at least {first} epochs to reach the first detection epoch, "
            f"got {config.train.epochs}"
        )


def _sweep(
    config: ExperimentConfig,
    default_modes: List[CorruptionMode],
    default_proportions: List[float],
) -> List[Dict[str, Any]]:
    """Tag sets for every (seed, mode, kind, proportion); a zero proportion runs once per mode."""
    modes = config.modes if config.modes is not None else default_modes
    proportions = config.proportions if config.proportions is not None else default_proportions
    tags = []
    for seed in config.seeds:
        for mode in modes:
            for proportion in proportions:
                kinds = config.kinds[:1] if proportion == 0 else config.kinds
                for kind in kinds:
                    tags.append(
                        {
                            "seed": seed,
                            "mode": mode.value,
                            "kind": kind.value if proportion > 0 else "none",
                            "proportion": float(proportion),
                            "_kind": kind,
                            "_mode": mode,
                        }
                    )
    return tags


def _spec(
    config: ExperimentConfig,
    tags: Dict[str, Any],
    pipeline: str,
    detectors: List[str],
    out_dir: Optional[Path],
) -> ArmSpec:
    public = {k: v for k, v in tags.items() if not k.startswith("_")}
    derived = arm_config(config, tags["seed"], tags["_mode"], tags["_kind"], tags["proportion"])
    derived = derived.model_copy(update={"pipeline": pipeline})
    name = arm_name(public, pipeline)
    return ArmSpec(
        name=name,
        config=derived.to_dict(),
        pipeline=pipeline,
        detectors=detectors,
        tags=public,
        out_dir=str(out_dir / "arms" / name) if out_dir else None,
    )


def _mean_std(values: List[float]) -> Tuple[Optional[float], Optional[float]]:
    if not values:
        return None, None
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def experiment1(
    config: ExperimentConfig, out_dir: Optional[Path] = None, jobs: int = 1
) -> ExperimentReport:
    """Detection quality of the VOG and loss detectors on shared baseline trajectories."""
    _require_events(config, "exp1")
    started = time.perf_counter()
    detectors = ["vog", "loss"]
    specs = [
        _spec(config, tags, "baseline", detectors, out_dir)
        for tags in _sweep(config, [CorruptionMode.RANDOM], EXP1_PROPORTIONS)
    ]
    outcomes = run_arms(specs, jobs)

    rows: List[Dict[str, Any]] = []
    by_epoch: List[Dict[str, Any]] = []
    for outcome in outcomes:
        for detector in detectors:
            reports = outcome.detection[detector]
            for i, report in enumerate(reports):
                row = {
                    **outcome.spec.tags,
                    "detector": detector,
                    "epoch": report["epoch"],
                    "accuracy": report["accuracy"],
                    "sensitivity": report["sensitivity"],
                    "specificity": report["specificity"],
                    "threshold": report["threshold"],
                    "flagged": report["tp"] + report["fp"],
                    "corrupted": report["tp"] + report["fn"],
                }
                by_epoch.append(row)
                if i == 0:
                    rows.append(row)

    report = ExperimentReport(
        experiment="exp1",
        config=config.to_dict(),
        digests={o.spec.name: o.digest for o in outcomes},
        tables={
            "detection": rows,
            "detection_by_epoch": by_epoch,
            "detection_mean": _seed_means(
                rows, ["mode", "kind", "proportion", "detector"],
                ["accuracy", "sensitivity", "specificity"],
            ),
        },
        arms=[o.summary() for o in outcomes],
        wall_clock=time.perf_counter() - started,
    )
    if out_dir is not None:
        report.save(out_dir)
    return report


def experiment2(
    config: ExperimentConfig, out_dir: Optional[Path] = None, jobs: int = 1
) -> ExperimentReport:
    """Dice of corrupted training labels against clean ones, before and after refurbishment."""
    _require_events(config, "exp2")
    started = time.perf_counter()
    specs = [
        _spec(config, tags, "refurbished", [config.detector], out_dir)
        for tags in _sweep(config, list(CorruptionMode), EXP2_PROPORTIONS)
    ]
    outcomes = run_arms(specs, jobs)

    rows: List[Dict[str, Any]] = []
    per_sample: List[Dict[str, Any]] = []
    for outcome in outcomes:
        before = [b for b, _ in outcome.label_dice.values()]
        after = [a for _, a in outcome.label_dice.values()]
        before_mean, before_std = _mean_std(before)
        after_mean, after_std = _mean_std(after)
        rows.append(
            {
                **outcome.spec.tags,
                "n_corrupted": len(outcome.label_dice),
                "before_mean": before_mean,
                "before_std": before_std,
                "after_mean": after_mean,
                "after_std": after_std,
                "events": len(outcome.refurbishment),
                "refurbished": sum(len(e["flagged"]) for e in outcome.refurbishment),
            }
        )
        for sid in sorted(outcome.label_dice):
            b, a = outcome.label_dice[sid]
            per_sample.append({**outcome.spec.tags, "id": sid, "before": b, "after": a})

    report = ExperimentReport(
        experiment="exp2",
        config=config.to_dict(),
        digests={o.spec.name: o.digest for o in outcomes},
        tables={
            "refurbishment": rows,
            "refurbishment_mean": _seed_means(
                rows, ["mode", "proportion", "kind"], ["before_mean", "after_mean"]
            ),
            "refurbishment_per_sample": per_sample,
        },
        arms=[o.summary() for o in outcomes],
        wall_clock=time.perf_counter() - started,
    )
    if out_dir is not None:
        report.save(out_dir)
    return report


def compare_arms(baseline: ArmOutcome, refurbished: ArmOutcome) -> List[Dict[str, Any]]:
    """Per-structure paired comparison of two arms' test Dice."""
    if baseline.digest != refurbished.digest:
        raise DataError(
            f"paired arms {baseline.spec.name} and {refurbished.spec.name} "
            "trained on different datasets"
        )
    rows = []
    for structure in STRUCTURES:
        base = np.asarray(baseline.evaluation.column(structure))
        refurb = np.asarray(refurbished.evaluation.column(structure))
        test = wilcoxon_signed_rank(refurb - base)
        base_mean = float(base.mean())
        refurb_mean = float(refurb.mean())
        rows.append(
            {
                **baseline.spec.tags,
                "structure": structure,
                "baseline_mean": base_mean,
                "refurbished_mean": refurb_mean,
                "difference": refurb_mean - base_mean,
                "W": test.statistic,
                "n_effective": test.n_effective,
                "p_value": test.p_value,
                "method": test.method,
                "significant": test.significant,
                "star": "*" if test.significant and refurb_mean > base_mean else "",
                "baseline_outliers": len(baseline.evaluation.outliers(structure)),
                "refurbished_outliers": len(refurbished.evaluation.outliers(structure)),
            }
        )
    return rows


def experiment3(
    config: ExperimentConfig, out_dir: Optional[Path] = None, jobs: int = 1
) -> ExperimentReport:
    """Paired baseline and refurbished pipelines evaluated on the clean test split."""
    _require_events(config, "exp3")
    started = time.perf_counter()
    specs: List[ArmSpec] = []
    for tags in _sweep(config, list(CorruptionMode), EXP3_PROPORTIONS):
        specs.append(_spec(config, tags, "baseline", [config.detector], out_dir))
        specs.append(_spec(config, tags, "refurbished", [config.detector], out_dir))
    outcomes = run_arms(specs, jobs)

    comparison: List[Dict[str, Any]] = []
    summary: List[Dict[str, Any]] = []
    per_sample: List[Dict[str, Any]] = []
    for baseline, refurbished in zip(outcomes[::2], outcomes[1::2]):
        comparison.extend(compare_arms(baseline, refurbished))
        for outcome in (baseline, refurbished):
            pipeline = outcome.spec.pipeline
            for structure, stats in outcome.evaluation.summary().items():
                summary.append(
                    {**outcome.spec.tags, "pipeline": pipeline, "structure": structure, **stats}
                )
            for row in outcome.evaluation.rows():
                per_sample.append({**outcome.spec.tags, "pipeline": pipeline, **row})

    report = ExperimentReport(
        experiment="exp3",
        config=config.to_dict(),
        digests={o.spec.name: o.digest for o in outcomes},
        tables={
            "comparison": comparison,
            "test_summary": summary,
            "test_dice_per_sample": per_sample,
        },
        arms=[o.summary() for o in outcomes],
        wall_clock=time.perf_counter() - started,
    )
    if out_dir is not None:
        report.save(out_dir)
    return report


def train_arm(
    config: ExperimentConfig, out_dir: Path, data_dir: Optional[Path] = None
) -> ExperimentReport:
    """Train a single arm as configured and write its artifacts to ``out_dir``."""
    started = time.perf_counter()
    spec = ArmSpec(
        name=config.pipeline,
        config=config.to_dict(),
        pipeline=config.pipeline,
        detectors=[config.detector],
        tags={"seed": config.train.seed, "pipeline": config.pipeline},
        out_dir=str(out_dir),
        data_dir=str(data_dir) if data_dir else None,
    )
    outcome = run_arm(spec)
    report = ExperimentReport(
        experiment="train",
        config=config.to_dict(),
        digests={spec.name: outcome.digest},
        tables={
            "trace_log": outcome.trace_log,
            "test_summary": [
                {"structure": k, **v} for k, v in outcome.evaluation.summary().items()
            ],
        },
        arms=[outcome.summary()],
        wall_clock=time.perf_counter() - started,
    )
    report.save(out_dir)
    return report


def _seed_means(
    rows: List[Dict[str, Any]], keys: List[str], metrics: List[str]
) -> List[Dict[str, Any]]:
    """Average ``metrics`` over seeds for each combination of ``keys``."""
    groups: Dict[Tuple, List[Dict[str, Any]]] = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row)
    out = []
    for key, members in groups.items():
        entry: Dict[str, Any] = dict(zip(keys, key))
        entry["n_seeds"] = len(members)
        for metric in metrics:
            values = [m[metric] for m in members if m[metric] is not None]
            entry[metric], entry[f"{metric}_std"] = _mean_std(values)
        out.append(entry)
    return out
