"""
Data source resolution.

Looks up a logical dataset name in config/data_sources.yaml and returns the
adapter configured for it, plus any fixed split boundaries.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from library.adapters.ett_csv import EttCsvAdapter
from library.errors import ConfigError

DEFAULT_SOURCES_PATH = Path("config/data_sources.yaml")

ADAPTERS = {"ett_csv": EttCsvAdapter}


class SplitBoundaries(BaseModel):
    """Fixed split ends as row indices."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    train_end: int
    val_end: int
    test_end: int

    @model_validator(mode="after")
    def _ordered(self) -> SplitBoundaries:
        if not 0 < self.train_end < self.val_end < self.test_end:
            raise ValueError(
                f"boundaries must satisfy 0 < train_end < val_end < test_end, got "
                f"{self.train_end}, {self.val_end}, {self.test_end}"
            )
        return self


class DataSourceConfig(BaseModel):
    """One entry of the data source registry."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    adapter: str
    root_path: str
    path_template: str
    timezone: str = "UTC"
    frequency: str | None = None
    boundaries: SplitBoundaries | None = None


class DataSourceResolver:
    """
    Dataset registry backed by a YAML file.

    Args:
        path: Registry file (default: ./config/data_sources.yaml)
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else DEFAULT_SOURCES_PATH
        if not self.path.exists():
            raise FileNotFoundError(f"data source registry not found: {self.path}")
        with open(self.path, "r", encoding="utf-8") as f:
            raw: dict[str, Any] = yaml.safe_load(f) or {}
        self._sources: dict[str, dict[str, Any]] = raw.get("data_sources") or {}

    @property
    def names(self) -> list[str]:
        return sorted(self._sources)

    def get(self, name: str) -> DataSourceConfig:
        if name not in self._sources:
            raise ConfigError(
                f"unknown dataset {name!r} in {self.path}; known: {', '.join(self.names)}"
            )
        try:
            return DataSourceConfig.model_validate(self._sources[name])
        except ValidationError as exc:
            raise ConfigError(f"invalid data source {name!r} in {self.path}: {exc}") from exc

    def adapter(self, name: str) -> EttCsvAdapter:
        source = self.get(name)
        if source.adapter not in ADAPTERS:
            raise ConfigError(
                f"dataset {name!r} uses unknown adapter {source.adapter!r}; "
                f"available: {', '.join(sorted(ADAPTERS))}"
            )
        return ADAPTERS[source.adapter](source.model_dump(), name)
