# agency_count/core/config.py
from __future__ import annotations

import math
from functools import lru_cache
from pathlib import Path
from typing import Literal, Mapping, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import (
    BaseSettings,
    SettingsConfigDict,
    TomlConfigSettingsSource,
)

Distribution = Literal["laplace", "normal"]
PositiveRule = Literal["verbatim", "matched_guaranteed"]
Weighting = Literal["uncertainty", "uniform"]
Objective = Literal["contrastive", "pull"]
PartitionStrategy = Literal["quantile", "geometric", "linear"]
Backbone = Literal["toy_cnn", "pluggable"]


class DataConfig(BaseModel):
    # -------------------------------------------------
    # Rasterization
    # -------------------------------------------------
    stride: int = Field(8, ge=1)
    mask_dilation: int = Field(1, ge=0)
    density_floor: float = Field(1e-3, gt=0)

    # -------------------------------------------------
    # Augmentation (random scaling, flip, crop)
    # -------------------------------------------------
    crop_size: int = Field(128, ge=1)
    scale_range: Tuple[float, float] = (0.7, 1.3)
    hflip_prob: float = Field(0.5, ge=0.0, le=1.0)

    @field_validator("scale_range")
    @classmethod
    def _ordered_scale(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        lo, hi = value
        if lo <= 0 or lo > hi:
            raise ValueError(f"scale_range must satisfy 0 < lo <= hi, got {value}")
        return value

    @model_validator(mode="after")
    def _crop_on_stride(self) -> "DataConfig":
        if self.crop_size % self.stride != 0:
            raise ValueError(
                f"crop_size {self.crop_size} is not divisible by stride {self.stride}"
            )
        return self


class ModelConfig(BaseModel):
    backbone: Backbone = "toy_cnn"
    in_channels: int = Field(1, ge=1)
    channels: int = Field(64, ge=1)
    stride: int = 8
    attn_heads: int = Field(2, ge=1)
    attn_layers: int = Field(1, ge=0)
    head_hidden: int = Field(64, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _heads_divide_channels(self) -> "ModelConfig":
        if self.channels % self.attn_heads != 0:
            raise ValueError(
                f"channels ({self.channels}) must be divisible by "
                f"attn_heads ({self.attn_heads})"
            )
        if self.stride not in (1, 2, 4, 8):
            raise ValueError(f"toy backbone supports strides 1, 2, 4, 8; got {self.stride}")
        return self


class LossWeights(BaseModel):
    beta: float = Field(1.0, ge=0)
    sigma: float = Field(8.0, gt=0)
    lambda_m: float = Field(0.1, ge=0)
    lambda_c: float = Field(0.01, ge=0)
    lambda_u: float = Field(0.1, ge=0)

    @model_validator(mode="after")
    def _finite(self) -> "LossWeights":
        for name, value in self.model_dump().items():
            if not math.isfinite(value):
                raise ValueError(f"loss.{name} must be finite, got {value}")
        return self


class MatchConfig(BaseModel):
    distribution: Distribution = "laplace"
    tau: float = Field(0.1, gt=0)
    threshold: float = Field(0.25, gt=0)
    lambda_b: float = Field(1.0, ge=0)
    positive_rule: PositiveRule = "matched_guaranteed"
    clamp_weights: bool = False
    weighting: Weighting = "uncertainty"
    objective: Objective = "contrastive"
    eps_num: float = Field(1e-12, gt=0)


class AgencyConfig(BaseModel):
    num_agents: int = Field(24, ge=1)
    partition_strategy: PartitionStrategy = "quantile"
    agent_lr: float = Field(1e-3, ge=0)


class TrainConfig(BaseModel):
    epochs: int = Field(20, ge=0)
    batch_labeled: int = Field(1, ge=0)
    batch_unlabeled: int = Field(4, ge=0)
    model_lr: float = Field(1e-4, ge=0)
    seed: int = 0
    checkpoint_every: int = Field(5, ge=0)
    debug_purity: bool = False
    labeled_only: bool = False

    @model_validator(mode="after")
    def _some_batch(self) -> "TrainConfig":
        if self.batch_labeled == 0 and self.batch_unlabeled == 0:
            raise ValueError("batch_labeled and batch_unlabeled cannot both be 0")
        return self


class Settings(BaseSettings):
    """
    Full run configuration.

    Precedence: constructor kwargs (and therefore a TOML file loaded through
    ``Settings.from_file``), then ``AGENCY_COUNT_*`` environment variables,
    then ``.env``, then defaults.
    """

    data: DataConfig = Field(default_factory=DataConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    loss: LossWeights = Field(default_factory=LossWeights)
    contrastive: MatchConfig = Field(default_factory=MatchConfig)
    agency: AgencyConfig = Field(default_factory=AgencyConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)

    model_config = SettingsConfigDict(
        env_prefix="AGENCY_COUNT_",
        env_nested_delimiter="__",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="forbid",
        protected_namespaces=(),
    )

    @model_validator(mode="after")
    def _stride_agreement(self) -> "Settings":
        if self.model.stride != self.data.stride:
            raise ValueError(
                f"model.stride ({self.model.stride}) must match "
                f"data.stride ({self.data.stride})"
            )
        return self

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "Settings":
        """
        Load settings from a flat TOML document of dotted keys::

            loss.beta = 1.0
            contrastive.distribution = "normal"
            train.epochs = 10
        """
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"Config file not found: {path}")
        file_values = TomlConfigSettingsSource(cls, toml_file=path)()
        merged = _deep_merge(dict(file_values), overrides)
        return cls(**merged)

    def with_value(self, dotted_key: str, value) -> "Settings":
        """Return a copy with one ``section.field`` replaced (and re-validated)."""
        return self.with_values({dotted_key: value})

    def with_values(self, values: Mapping[str, object]) -> "Settings":
        """Several ``section.field`` replacements, validated once on the result."""
        payload = self.model_dump()
        for dotted_key, value in values.items():
            section, _, field = dotted_key.partition(".")
            if not field or section not in payload or field not in payload[section]:
                raise KeyError(f"Unknown config key: {dotted_key}")
            payload[section][field] = value
        return type(self)(**payload)

    def flat(self) -> dict[str, object]:
        """Flat ``section.field -> value`` view, used for run records."""
        return {
            f"{section}.{key}": value
            for section, values in self.model_dump().items()
            for key, value in values.items()
        }


def _deep_merge(base: dict, overrides: dict) -> dict:
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            base[key] = _deep_merge(dict(base[key]), value)
        else:
            base[key] = value
    return base


@lru_cache
def get_settings() -> Settings:
    """Returns cached application settings."""
    return Settings()


def reset_settings_cache():
    """Clear cached settings for testing or reload."""
    get_settings.cache_clear()
