"""Pytest fixtures for labelmend tests."""

import pytest
import tempfile
from pathlib import Path

import numpy as np

from labelmend.config import (
    ArchitectureDescriptor,
    DatasetConfig,
    ExperimentConfig,
    ScheduleConfig,
    TrainConfig,
)
from labelmend.core.events import EventBus
from labelmend.data import generate_phantom, split_dataset
from labelmend.detection import DetectorRegistry, register_builtin_detectors


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_config():
    """A config small enough to train in seconds: 12 phantoms at 32x32, events from epoch 4."""
    return ExperimentConfig(
        dataset=DatasetConfig(n=12, height=32, width=32, seed=0, fractions=(0.5, 0.25, 0.25)),
        model=ArchitectureDescriptor(levels=1, base_channels=4),
        train=TrainConfig(epochs=4, batch_size=3, learning_rate=1e-2, seed=0),
        schedule=ScheduleConfig(warm_up=2, interval=2, window_t=2, history_length=2),
    )


@pytest.fixture
def phantoms():
    """Twelve 32x32 phantoms."""
    return generate_phantom(12, (32, 32), seed=0)


@pytest.fixture
def manifest(phantoms):
    """6/3/3 split of the phantoms."""
    return split_dataset(phantoms, (0.5, 0.25, 0.25), seed=0)


@pytest.fixture
def event_bus():
    """Create a test event bus."""
    return EventBus()


@pytest.fixture
def detector_registry():
    """Create a detector registry with the built-in detectors."""
    return register_builtin_detectors(DetectorRegistry())
