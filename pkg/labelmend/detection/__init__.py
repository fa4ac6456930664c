"""Gradient traces, VOG and loss scores, outlier flagging and detection reports."""

from .traces import GradientTrace, TraceStore
from .scores import VogScore, iqr_flag, iqr_threshold, loss_score, quartiles, vog, vog_from_window
from .base import DetectionResult, Detector, LossDetector, VogDetector
from .registry import BUILTIN_DETECTORS, DetectorRegistry, register_builtin_detectors
from .report import DetectionEntry, DetectionReport, score_detection

__all__ = [
    "GradientTrace",
    "TraceStore",
    "VogScore",
    "iqr_flag",
    "iqr_threshold",
    "loss_score",
    "quartiles",
    "vog",
    "vog_from_window",
    "DetectionResult",
    "Detector",
    "LossDetector",
    "VogDetector",
    "BUILTIN_DETECTORS",
    "DetectorRegistry",
    "register_builtin_detectors",
    "DetectionEntry",
    "DetectionReport",
    "score_detection",
]
