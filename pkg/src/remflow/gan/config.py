"""Training configuration for the photo-to-mask translator."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from ..errors import ValidationError

GAN_MODES = ("vanilla", "least_squares")
NORMS = ("batch", "instance")


@dataclass
class GanConfig:
    """Defaults follow the classic paired-translation recipe at desk scale:
    Adam at 2e-4, heavy L1 weighting, batch size 1, batch normalization.
    """

    learning_rate: float = 2e-4
    l1_weight: float = 100.0
    gan_mode: str = "vanilla"
    generator_depth: int = 6
    norm: str = "batch"
    batch_size: int = 1
    image_size: int = 64
    base_channels: int = 16
    seed: int = 0

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be > 0")
        if self.l1_weight < 0:
            raise ValidationError("l1_weight must be >= 0")
        if self.gan_mode not in GAN_MODES:
            raise ValidationError(f"gan_mode must be one of {GAN_MODES}")
        if self.generator_depth < 3:
            raise ValidationError("generator_depth must be >= 3")
        if self.norm not in NORMS:
            raise ValidationError(f"norm must be one of {NORMS}")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.base_channels < 8:
            raise ValidationError("base_channels must be >= 8")
        size = self.image_size
        if size < 1 or size & (size - 1):
            raise ValidationError(f"image_size must be a power of two, got {size}")
        if size < 2 ** self.generator_depth:
            raise ValidationError(
                f"image_size {size} < 2^depth ({2 ** self.generator_depth})")
        if self.seed < 0:
            raise ValidationError("seed must be >= 0")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GanConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown GanConfig fields: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def from_json_file(cls, path) -> "GanConfig":
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except OSError as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"bad JSON in config {path}: {exc}") from exc
