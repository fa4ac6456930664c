"""Detector registry for selecting detectors by name."""

from typing import Dict, List, Optional, Type
import logging

from ..errors import ConfigError
from .base import Detector, LossDetector, VogDetector

logger = logging.getLogger(__name__)

BUILTIN_DETECTORS: List[Type[Detector]] = [VogDetector, LossDetector]


class DetectorRegistry:
    """Registry for managing detectors."""

    def __init__(self):
        self._detectors: Dict[str, Detector] = {}

    def register(self, detector: Detector) -> None:
        """Register a detector."""
        if detector.name in self._detectors:
            logger.warning(f"Overwriting existing detector: {detector.name}")
        self._detectors[detector.name] = detector
        logger.debug(f"Registered detector: {detector.name}")

    def unregister(self, name: str) -> bool:
        if name in self._detectors:
            del self._detectors[name]
            return True
        return False

    def get(self, name: str) -> Optional[Detector]:
        return self._detectors.get(name)

    def require(self, name: str) -> Detector:
        """Get a detector, raising ConfigError for unknown names."""
        detector = self.get(name)
        if detector is None:
            known = ", ".join(sorted(self._detectors)) or "none"
            raise ConfigError(f"Unknown detector: {name} (available: {known})")
        return detector

    def list_detectors(self) -> List[Detector]:
        return list(self._detectors.values())


def register_builtin_detectors(
    registry: DetectorRegistry, window_t: int = 5, literal_window: bool = False
) -> DetectorRegistry:
    for cls in BUILTIN_DETECTORS:
        registry.register(cls(window_t=window_t, literal_window=literal_window))
    return registry
