"""System configuration and logging setup."""

from library.system.config import (
    LoggingConfig,
    RuntimeConfig,
    SystemConfig,
    SystemOutputConfig,
    load_system_config,
)
from library.system.log import close_log_file, configure_logging

__all__ = [
    "LoggingConfig",
    "RuntimeConfig",
    "SystemConfig",
    "SystemOutputConfig",
    "close_log_file",
    "configure_logging",
    "load_system_config",
]
