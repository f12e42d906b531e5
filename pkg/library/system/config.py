"""
System configuration.

Resolution order for the system file:
    1. explicit path (``--system-config``)
    2. ./config/polyssm.yaml
    3. built-in defaults
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from library.errors import ConfigError

DEFAULT_SYSTEM_PATH = Path("config/polyssm.yaml")

LogLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR"]


class LoggingConfig(BaseModel):
    """
    Logging output.

    Attributes:
        level: Minimum console level
        format: "console" (colored key-value) or "json" (one object per line)
        timestamp_format: "iso", "compact" (YYYYmmdd HH:MM:SS) or "time" (HH:MM:SS)
        enable_file: Also append records to ``file_path``
        file_path: Log file (default logs/polyssm.log)
        file_level: Minimum level for the file
    """

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    level: LogLevel = "INFO"
    format: Literal["console", "json"] = "console"
    timestamp_format: Literal["iso", "compact", "time"] = "compact"
    enable_file: bool = False
    file_path: str | None = None
    file_level: LogLevel = "WARNING"


class SystemOutputConfig(BaseModel):
    """
    Where runs land when a run config does not name a directory.

    Structure: {experiments_root}/{experiment_id}/runs/{timestamp}/
    """

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    experiments_root: str = "experiments"
    run_id_format: str = "%Y%m%d_%H%M%S"


class RuntimeConfig(BaseModel):
    """Thread count for scan and evaluation pools; 1 keeps runs bit-reproducible."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    threads: int = Field(default=1, ge=1)


class SystemConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    logging: LoggingConfig = Field(default_factory=LoggingConfig)
    output: SystemOutputConfig = Field(default_factory=SystemOutputConfig)
    runtime: RuntimeConfig = Field(default_factory=RuntimeConfig)
    sources_config: str = "config/data_sources.yaml"


def load_system_config(path: str | Path | None = None) -> SystemConfig:
    """
    Load the system configuration.

    Args:
        path: Explicit file; when None, ./config/polyssm.yaml is used if present

    Raises:
        FileNotFoundError: ``path`` was given and does not exist
        ConfigError: Invalid YAML or unknown keys
    """
    if path is not None:
        source = Path(path)
        if not source.exists():
            raise FileNotFoundError(f"system config not found: {source}")
    elif DEFAULT_SYSTEM_PATH.exists():
        source = DEFAULT_SYSTEM_PATH
    else:
        return SystemConfig()

    try:
        with open(source, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: invalid YAML ({exc})") from exc
    try:
        return SystemConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
