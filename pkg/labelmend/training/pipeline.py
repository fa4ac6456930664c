"""Label-quality hook: record traces each epoch, detect and refurbish on schedule."""

from pathlib import Path
from typing import Dict, List, Optional
import logging

from ..config import ScheduleConfig
from ..core.events import (
    EVENT_DETECTION_SCORED,
    EVENT_EPOCH_END,
    EVENT_REFURBISH_APPLIED,
    Event,
    EventBus,
)
from ..detection import (
    DetectionReport,
    DetectorRegistry,
    TraceStore,
    register_builtin_detectors,
    score_detection,
)
from ..refurbish import HistoryStore, RefurbishmentEvent, RefurbishmentLog, refurbish_step

logger = logging.getLogger(__name__)


class LabelQualityHook:
    """Runs the detection/refurbishment schedule on top of a training run.

    Every detector in ``detectors`` is scored at each event epoch. When
    ``refurbish`` is set, samples flagged by ``primary`` get their training
    masks replaced by averaged-prediction pseudo-labels.
    """

    def __init__(
        self,
        schedule: ScheduleConfig,
        detectors: Optional[List[str]] = None,
        primary: str = "vog",
        refurbish: bool = False,
        log_path: Optional[Path] = None,
    ):
        self.schedule = schedule
        self.registry = register_builtin_detectors(
            DetectorRegistry(), schedule.window_t, schedule.literal_window
        )
        names = detectors if detectors is not None else [primary]
        if primary not in names:
            names = [primary] + names
        self.detectors = [self.registry.require(name) for name in names]
        self.primary = primary
        self.refurbish = refurbish

        self.traces = TraceStore(schedule.window_t, schedule.literal_window, schedule.pool_cap)
        self.histories = HistoryStore(schedule.history_length, schedule.pool_cap)
        self.reports: Dict[str, List[DetectionReport]] = {d.name: [] for d in self.detectors}
        self.log = RefurbishmentLog(log_path)
        self._bus: Optional[EventBus] = None

    @property
    def events(self) -> List[RefurbishmentEvent]:
        return self.log.events

    def attach(self, bus: EventBus) -> None:
        self._bus = bus
        bus.subscribe(EVENT_EPOCH_END, self.on_epoch_end)

    def first_report(self, detector: str) -> Optional[DetectionReport]:
        reports = self.reports.get(detector) or []
        return reports[0] if reports else None

    def on_epoch_end(self, event: Event) -> None:
        data = event.data
        epoch: int = data["epoch"]
        ids: List[str] = sorted(data["ids"])
        trainset = data["trainset"]

        for sid in ids:
            self.traces.record_epoch(sid, epoch, data["logit_grads"][sid], data["losses"][sid])
            if self.refurbish:
                self.histories.record(sid, epoch, data["probs"][sid])

        if not self.schedule.is_event_epoch(epoch):
            return

        corrupted = [sid for sid in ids if trainset[sid].corrupted]
        flagged_by: Dict[str, List[str]] = {}
        for detector in self.detectors:
            result = detector.detect(self.traces, epoch, ids)
            report = score_detection(
                result.flagged,
                corrupted,
                ids,
                scores=result.scores,
                threshold=result.threshold,
                epoch=epoch,
                detector=detector.name,
                downsampled=self.traces.downsampled,
                pool_cap=self.schedule.pool_cap,
            )
            self.reports[detector.name].append(report)
            flagged_by[detector.name] = result.flagged
            if self._bus is not None:
                self._bus.emit(
                    EVENT_DETECTION_SCORED,
                    {"epoch": epoch, "detector": detector.name, "report": report},
                )

        if not self.refurbish:
            return
        updated, refurb = refurbish_step(
            trainset, flagged_by[self.primary], self.histories, epoch, self.schedule
        )
        trainset.update(updated)
        self.log.append(refurb)
        if self._bus is not None:
            self._bus.emit(EVENT_REFURBISH_APPLIED, {"epoch": epoch, "event": refurb})
