"""Configuration management for labelmend experiments."""

import json
from enum import Enum
from pathlib import Path
from typing import List, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ConfigError

NUM_CLASSES = 4  # background, LV, LVM, LA
FOREGROUND_CLASSES = (1, 2, 3)
CLASS_NAMES = {0: "background", 1: "LV", 2: "LVM", 3: "LA"}


class CorruptionKind(str, Enum):
    """The three synthetic label error types."""
    INCOMPLETE = "incomplete"
    BOUNDARY = "boundary"
    MERGED = "merged"


class CorruptionMode(str, Enum):
    RANDOM = "random"
    SYSTEMATIC = "systematic"


class DatasetConfig(BaseModel):
    """Phantom dataset generation parameters."""
    n: int = Field(200, ge=3)
    height: int = 64
    width: int = 64
    seed: int = 0
    fractions: Tuple[float, float, float] = (0.8, 0.1, 0.1)

    @field_validator("height", "width")
    @classmethod
    def _power_of_two(cls, value: int) -> int:
        if value < 32 or value & (value - 1):
            raise ValueError(f"raster extent must be a power of two >= 32, got {value}")
        return value

    @field_validator("fractions")
    @classmethod
    def _fractions_sum(cls, value: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if any(f < 0 for f in value) or abs(sum(value) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must be nonnegative and sum to 1, got {value}")
        return value


class CorruptionSpec(BaseModel):
    """Which label error to inject, how, and into how much of train+val."""
    kind: CorruptionKind = CorruptionKind.INCOMPLETE
    mode: CorruptionMode = CorruptionMode.RANDOM
    proportion: float = Field(0.0, ge=0.0, le=1.0)
    seed: int = 0

    # Kind-specific knobs
    removal_range: Tuple[float, float] = (0.2, 0.5)
    systematic_removal: float = 0.35
    radius_choices: List[int] = Field(default_factory=lambda: [1, 2, 3])
    systematic_radius: int = 2

    @field_validator("radius_choices")
    @classmethod
    def _radii_positive(cls, value: List[int]) -> List[int]:
        if not value or min(value) < 1:
            raise ValueError("structuring element radius must be >= 1")
        return value

    @field_validator("systematic_radius")
    @classmethod
    def _radius_positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError("structuring element radius must be >= 1")
        return value

    @model_validator(mode="after")
    def _fractions_open(self) -> "CorruptionSpec":
        lo, hi = self.removal_range
        if not 0.0 < lo <= hi < 1.0:
            raise ValueError(f"removal_range must lie inside (0, 1), got {self.removal_range}")
        if not 0.0 < self.systematic_removal < 1.0:
            raise ValueError("systematic_removal must lie inside (0, 1)")
        return self


class ArchitectureDescriptor(BaseModel):
    """U-Net capacity: encoder levels, first-level channels, output classes."""
    levels: int = 2
    base_channels: int = 8
    num_classes: int = NUM_CLASSES
    in_channels: int = 1

    @model_validator(mode="after")
    def _positive(self) -> "ArchitectureDescriptor":
        if min(self.levels, self.base_channels, self.num_classes, self.in_channels) < 1:
            raise ValueError("architecture needs at least one level, channel and class")
        return self


class TrainConfig(BaseModel):
    """Optimizer and loop settings."""
    learning_rate: float = Field(1e-3, gt=0.0)
    batch_size: int = Field(4, ge=1)
    epochs: int = Field(30, ge=0)
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8


class ScheduleConfig(BaseModel):
    """Warm-up, refurbishment interval and VOG window."""
    warm_up: int = Field(10, ge=0)
    interval: int = Field(5, ge=1)
    window_t: int = Field(5, ge=1)
    history_length: int = Field(5, ge=1)  # epochs averaged into a pseudo-label
    literal_window: bool = False  # t+1 epochs with divisor t
    pool_cap: Optional[int] = 65536  # max stored gradient/prediction dimension

    @model_validator(mode="after")
    def _warm_up_covers_window(self) -> "ScheduleConfig":
        if self.warm_up < self.window_t:
            raise ValueError(
                f"warm_up ({self.warm_up}) must be >= window_t ({self.window_t})"
            )
        return self

    def is_event_epoch(self, epoch: int) -> bool:
        """Epochs (1-based) at which detection and refurbishment run."""
        return epoch > self.warm_up and epoch % self.interval == 0

    def first_event_epoch(self) -> int:
        epoch = self.warm_up + 1
        while epoch % self.interval:
            epoch += 1
        return epoch


class ExperimentConfig(BaseModel):
    """Everything one experiment invocation needs; a file of this fixes every report byte."""
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    corruption: CorruptionSpec = Field(default_factory=CorruptionSpec)
    model: ArchitectureDescriptor = Field(default_factory=ArchitectureDescriptor)
    train: TrainConfig = Field(default_factory=TrainConfig)
    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)

    detector: Literal["vog", "loss"] = "vog"
    pipeline: Literal["baseline", "refurbished"] = "baseline"
    output_dir: Path = Path("runs")

    # Experiment sweeps; None means the experiment default
    kinds: List[CorruptionKind] = Field(default_factory=lambda: list(CorruptionKind))
    modes: Optional[List[CorruptionMode]] = None
    proportions: Optional[List[float]] = None
    seeds: List[int] = Field(default_factory=lambda: [0])

    @field_validator("pipeline", mode="before")
    @classmethod
    def _pipeline_alias(cls, value: str) -> str:
        return "refurbished" if value == "refurb" else value

    @field_validator("proportions")
    @classmethod
    def _proportions_range(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is not None and any(not 0.0 <= p <= 1.0 for p in value):
            raise ValueError(f"proportions must lie in [0, 1], got {value}")
        return value

    @classmethod
    def load(cls, path: Path) -> "ExperimentConfig":
        """Load configuration from a JSON or YAML file."""
        if not path.exists():
            raise ConfigError(f"Config file not found: {path}")
        text = path.read_text()
        try:
            if path.suffix.lower() in (".yaml", ".yml"):
                data = yaml.safe_load(text) or {}
            else:
                data = json.loads(text) if text.strip() else {}
        except (json.JSONDecodeError, yaml.YAMLError) as e:
            raise ConfigError(f"Cannot parse config {path}: {e}") from e
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigError(f"Invalid experiment config: {e}") from e

    def save(self, path: Path) -> None:
        """Save configuration as JSON (YAML when the suffix asks for it)."""
        path.parent.mkdir(parents=True, exist_ok=True)
        data = self.to_dict()
        if path.suffix.lower() in (".yaml", ".yml"):
            path.write_text(yaml.safe_dump(data, default_flow_style=False, sort_keys=True))
        else:
            path.write_text(json.dumps(data, indent=2, sort_keys=True))

    def to_dict(self) -> dict:
        return self.model_dump(mode="json")

    def paper_scale(self) -> "ExperimentConfig":
        """Restore the full-size protocol: 500 samples, 100 epochs."""
        return self.model_copy(
            update={
                "dataset": self.dataset.model_copy(update={"n": 500}),
                "train": self.train.model_copy(update={"epochs": 100}),
            }
        )

    def with_seed(self, seed: int) -> "ExperimentConfig":
        """Derive an arm config where every stochastic stage uses `seed`."""
        return self.model_copy(
            update={
                "dataset": self.dataset.model_copy(update={"seed": seed}),
                "corruption": self.corruption.model_copy(update={"seed": seed}),
                "train": self.train.model_copy(update={"seed": seed}),
            }
        )


class Settings(BaseSettings):
    """Environment-based settings."""
    model_config = SettingsConfigDict(env_prefix="LABELMEND_", case_sensitive=False)

    home: Path = Path("runs")
    jobs: int = 1
    debug: bool = False


# Global settings instance
settings = Settings()
