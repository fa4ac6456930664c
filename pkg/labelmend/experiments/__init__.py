"""Experiment harness: arms, the three experiments and their reports."""

from .reports import ExperimentReport, render_report, write_table
from .runner import (
    ArmOutcome,
    ArmSpec,
    PreparedData,
    compare_arms,
    experiment1,
    experiment2,
    experiment3,
    prepare_data,
    prepare_output,
    run_arm,
    run_arms,
    train_arm,
)

__all__ = [
    "ExperimentReport",
    "render_report",
    "write_table",
    "ArmOutcome",
    "ArmSpec",
    "PreparedData",
    "compare_arms",
    "experiment1",
    "experiment2",
    "experiment3",
    "prepare_data",
    "prepare_output",
    "run_arm",
    "run_arms",
    "train_arm",
]
