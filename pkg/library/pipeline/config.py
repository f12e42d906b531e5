"""
Run configuration.

A run file is YAML with four sections plus an identifier:

    experiment_id: synth_cdt
    model:  {...}   ModelConfig (channels, horizon, lookback, instance_norm come from data)
    data:   {...}   DataConfig
    train:  {...}   TrainConfig
    output: {...}   OutputConfig

Command-line flags are applied as dotted overrides (``train.seed=7``) to the
raw mapping before validation, so they obey the same rules as file values.
"""

from __future__ import annotations

import copy
from pathlib import Path
from typing import Any, Literal, Mapping

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from library.datasets.splits import DEFAULT_RATIOS
from library.datasets.synth import SynthConfig
from library.errors import ConfigError
from library.model.config import ModelConfig
from library.numerics import DEFAULT_DTYPE

Precision = Literal["float32", "float64"]


class TrainConfig(BaseModel):
    """
    Optimization settings.

    Attributes:
        lr: Adam learning rate (> 0)
        epochs: Maximum passes over the training windows
        batch_size: Windows per optimizer step
        patience: Non-improving validation epochs tolerated before stopping
        seed: Seeds initialization, shuffling and dropout
        precision: Parameter and activation dtype
        scan_mode: "sequential" or "parallel"
        workers: Threads for the parallel scan
        chunk: Scan window length for chunked evaluation (None = whole sequence)
        max_batches_per_epoch: Cap on optimizer steps per epoch (None = all windows)
        eval_batch_size: Windows per forward pass during evaluation
        weight_decay: Decoupled L2 shrinkage applied with each step
    """

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    lr: float = Field(default=1e-4, gt=0.0)
    epochs: int = Field(default=10, ge=1)
    batch_size: int = Field(default=32, ge=1)
    patience: int = Field(default=3, ge=1)
    seed: int = Field(default=0, ge=0)
    precision: Precision = DEFAULT_DTYPE
    scan_mode: Literal["sequential", "parallel"] = "parallel"
    workers: int = Field(default=1, ge=1)
    chunk: int | None = Field(default=None, ge=1)
    max_batches_per_epoch: int | None = Field(default=None, ge=1)
    eval_batch_size: int = Field(default=256, ge=1)
    weight_decay: float = Field(default=0.0, ge=0.0)


class DataConfig(BaseModel):
    """
    Where the series comes from and how it is windowed.

    Exactly one of ``dataset`` (registry name), ``csv`` (file path) or
    ``synth`` (generator settings) must be set.
    """

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    dataset: str | None = None
    csv: str | None = None
    synth: SynthConfig | None = None
    ratios: tuple[float, float, float] = DEFAULT_RATIOS
    normalize: bool = True
    instance_norm: bool = True
    lookback: int = Field(default=96, ge=1)
    horizon: int = Field(default=96, ge=1)

    @model_validator(mode="after")
    def _one_source(self) -> DataConfig:
        chosen = [name for name in ("dataset", "csv", "synth") if getattr(self, name) is not None]
        if len(chosen) != 1:
            raise ValueError(
                f"set exactly one of data.dataset, data.csv, data.synth (got {chosen or 'none'})"
            )
        return self

    @property
    def source_label(self) -> str:
        if self.dataset is not None:
            return self.dataset
        if self.csv is not None:
            return Path(self.csv).stem
        return f"synth_{self.synth.regime}" if self.synth is not None else "unknown"


class OutputConfig(BaseModel):
    """
    Run outputs.

    Attributes:
        dir: Run directory (default: <experiments_root>/<experiment_id>/runs/<timestamp>)
        record_timing: Add ``wall_ms`` to metrics records (makes files run-dependent)
        checkpoint_name: Best-on-validation checkpoint file name
        metrics_name: Metrics JSON-lines file name
    """

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    dir: str | None = None
    record_timing: bool = False
    checkpoint_name: str = "best.pssm"
    metrics_name: str = "metrics.jsonl"


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    experiment_id: str = "run"
    model: ModelConfig = Field(default_factory=ModelConfig)
    data: DataConfig = Field(default_factory=lambda: DataConfig(synth=SynthConfig()))
    train: TrainConfig = Field(default_factory=TrainConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @field_validator("experiment_id")
    @classmethod
    def _sanitize(cls, value: str) -> str:
        cleaned = "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in value.strip())
        if not cleaned:
            raise ValueError("experiment_id must not be empty")
        return cleaned.lower()

    def model_for(self, channels: int) -> ModelConfig:
        """ModelConfig completed with the data-derived fields."""
        patch = self.model.patch.model_copy(update={"lookback": self.data.lookback})
        try:
            return ModelConfig.model_validate(
                {
                    **self.model.model_dump(),
                    "channels": channels,
                    "horizon": self.data.horizon,
                    "instance_norm": self.data.instance_norm,
                    "patch": patch.model_dump(),
                }
            )
        except ValidationError as exc:
            raise ConfigError(f"model config does not fit the data: {exc}") from exc


def parse_override(text: str) -> tuple[str, Any]:
    """'train.lr=0.001' -> ('train.lr', 0.001); the value is parsed as YAML."""
    key, sep, raw = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override must look like section.key=value, got {text!r}")
    return key.strip(), yaml.safe_load(raw) if raw.strip() else None


def apply_overrides(raw: Mapping[str, Any], overrides: Mapping[str, Any]) -> dict[str, Any]:
    """Return a copy of ``raw`` with dotted keys set; intermediate mappings are created."""
    merged: dict[str, Any] = copy.deepcopy(dict(raw))
    for dotted, value in overrides.items():
        node = merged
        parts = dotted.split(".")
        for part in parts[:-1]:
            child = node.get(part)
            if child is None:
                child = node[part] = {}
            elif not isinstance(child, dict):
                raise ConfigError(f"cannot set {dotted!r}: {part!r} is not a section")
            node = child
        node[parts[-1]] = value
    return merged


def load_run_config(
    path: str | Path | None = None, overrides: Mapping[str, Any] | None = None
) -> RunConfig:
    """
    Read a run file and apply overrides.

    Args:
        path: YAML run file (None = defaults: synthetic data, default model)
        overrides: Dotted key -> value

    Raises:
        FileNotFoundError: ``path`` does not exist
        ConfigError: Invalid YAML, unknown keys or values out of range
    """
    raw: dict[str, Any] = {}
    source = "<defaults>"
    if path is not None:
        file = Path(path)
        if not file.exists():
            raise FileNotFoundError(f"run config not found: {file}")
        source = str(file)
        try:
            with open(file, "r", encoding="utf-8") as f:
                loaded = yaml.safe_load(f) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{file}: invalid YAML ({exc})") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"{file}: top level must be a mapping")
        raw = loaded
    if overrides:
        raw = apply_overrides(raw, overrides)
    if "data" in raw and isinstance(raw["data"], dict):
        data = raw["data"]
        if not any(data.get(k) is not None for k in ("dataset", "csv", "synth")):
            data["synth"] = {}
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
