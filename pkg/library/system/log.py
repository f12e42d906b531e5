"""Structured logging setup."""

from __future__ import annotations

import logging
import sys
from pathlib import Path
from typing import Any, TextIO

import structlog

from library.system.config import LoggingConfig

DEFAULT_LOG_FILE = Path("logs/polyssm.log")

_TIMESTAMP_FORMATS = {
    "iso": "iso",
    "compact": "%Y%m%d %H:%M:%S",
    "time": "%H:%M:%S",
}

_log_file: TextIO | None = None


class _TeeLogger:
    """Prints rendered lines to a stream and, at or above ``file_level``, to a file."""

    def __init__(self, stream: TextIO, file: TextIO | None, file_level: int):
        self.stream = stream
        self.file = file
        self.file_level = file_level

    def _write(self, message: str, level: int) -> None:
        print(message, file=self.stream, flush=True)
        if self.file is not None and level >= self.file_level:
            print(message, file=self.file, flush=True)

    def __getattr__(self, name: str) -> Any:
        level = logging.getLevelName(name.upper())
        level = level if isinstance(level, int) else logging.INFO
        return lambda message: self._write(message, level)


def configure_logging(config: LoggingConfig | None = None, stream: TextIO | None = None) -> None:
    """
    Configure structlog for the process.

    Console output goes to stderr so command output on stdout (CSV, JSON)
    stays machine-readable.

    Args:
        config: Logging settings (defaults when None)
        stream: Console stream override
    """
    global _log_file
    config = config or LoggingConfig()
    level = logging.getLevelName(config.level)
    renderer: Any = (
        structlog.processors.JSONRenderer(sort_keys=True)
        if config.format == "json"
        else structlog.dev.ConsoleRenderer(colors=stream is None and sys.stderr.isatty())
    )

    close_log_file()
    if config.enable_file:
        path = Path(config.file_path) if config.file_path else DEFAULT_LOG_FILE
        path.parent.mkdir(parents=True, exist_ok=True)
        _log_file = open(path, "a", encoding="utf-8")
    sink = _TeeLogger(stream or sys.stderr, _log_file, logging.getLevelName(config.file_level))

    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(
                fmt=_TIMESTAMP_FORMATS[config.timestamp_format],
                utc=config.timestamp_format == "iso",
            ),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level),
        logger_factory=lambda *args: sink,
        cache_logger_on_first_use=False,
    )


def close_log_file() -> None:
    """Close the file sink opened by the last ``configure_logging`` call, if any."""
    global _log_file
    if _log_file is not None:
        _log_file.close()
        _log_file = None
