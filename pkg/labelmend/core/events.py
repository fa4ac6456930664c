"""Synchronous event bus connecting the training loop to its hooks."""

from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional
import logging

logger = logging.getLogger(__name__)

# Event types
EVENT_EPOCH_END = "epoch:end"
EVENT_EPOCH_SUMMARY = "epoch:summary"
EVENT_CHECKPOINT_BEST = "checkpoint:best"
EVENT_DETECTION_SCORED = "detection:scored"
EVENT_REFURBISH_APPLIED = "refurbish:applied"

Subscriber = Callable[["Event"], None]


@dataclass
class Event:
    """An event in a training run."""
    type: str
    data: Dict[str, Any]
    sequence: int = 0

    @property
    def epoch(self) -> Optional[int]:
        return self.data.get("epoch")


class EventBus:
    """Pub/sub event bus.

    Subscribers run in subscription order, type-specific before wildcard ("*").
    A subscriber that raises aborts the emit; training must not continue past
    a failed hook.
    """

    def __init__(self, max_history: int = 256):
        self._subscribers: Dict[str, List[Subscriber]] = defaultdict(list)
        self._event_history: List[Event] = []
        self._max_history = max_history
        self._sequence = 0

    def subscribe(self, event_type: str, callback: Subscriber) -> None:
        """Subscribe to an event type."""
        self._subscribers[event_type].append(callback)

    def unsubscribe(self, event_type: str, callback: Subscriber) -> None:
        """Unsubscribe from an event type."""
        if callback in self._subscribers[event_type]:
            self._subscribers[event_type].remove(callback)

    def emit(self, event_type: str, data: Dict[str, Any], record: bool = True) -> Event:
        """Emit an event to subscribers.

        With ``record=False`` the event is delivered but not kept in history, so
        its payload is released once the subscribers return.
        """
        self._sequence += 1
        event = Event(type=event_type, data=data, sequence=self._sequence)

        if record:
            self._event_history.append(event)
            if len(self._event_history) > self._max_history:
                self._event_history = self._event_history[-self._max_history:]

        for callback in list(self._subscribers.get(event_type, [])):
            callback(event)
        for callback in list(self._subscribers.get("*", [])):
            callback(event)

        logger.debug(f"Emitted event: {event_type}")
        return event

    def get_recent_events(
        self, limit: int = 100, event_types: Optional[List[str]] = None
    ) -> List[Event]:
        """Get recent events from history."""
        events = self._event_history.copy()
        if event_types:
            events = [e for e in events if e.type in event_types]
        return events[-limit:]
