"""Core runtime plumbing."""

from .events import (
    EVENT_CHECKPOINT_BEST,
    EVENT_DETECTION_SCORED,
    EVENT_EPOCH_END,
    EVENT_EPOCH_SUMMARY,
    EVENT_REFURBISH_APPLIED,
    Event,
    EventBus,
)

__all__ = [
    "EVENT_CHECKPOINT_BEST",
    "EVENT_DETECTION_SCORED",
    "EVENT_EPOCH_END",
    "EVENT_EPOCH_SUMMARY",
    "EVENT_REFURBISH_APPLIED",
    "Event",
    "EventBus",
]
