"""
ETT-layout CSV Data Adapter.

Reads multivariate series stored one row per timestamp:

CSV Format:
    date,HUFL,HULL,MUFL,MULL,LUFL,LULL,OT
    2016-07-01 00:00:00,5.827,2.009,1.599,0.462,4.203,1.340,30.531
    2016-07-01 01:00:00,5.693,2.076,1.492,0.426,4.142,1.371,27.787

The first column must be named ``date`` and hold ISO-8601 timestamps; every
other column is a numeric channel. Timestamps are localized to the configured
timezone (naive values) or converted to it (aware values).

Usage:
    Configure a dataset in config/data_sources.yaml:

    data_sources:
      ETTh1:
        adapter: ett_csv
        root_path: "data/ETT-small"
        path_template: "{root_path}/{name}.csv"
        timezone: "UTC"

Limitations:
    - Missing values are rejected, not imputed
    - No resampling; rows must already be strictly increasing in time
"""

from __future__ import annotations

import csv
import io
import math
from datetime import datetime
from pathlib import Path
from typing import Any, TextIO

import numpy as np
import pytz
import structlog

from library.adapters.models.series_table import SeriesTable
from library.errors import DataError

logger = structlog.get_logger(__name__)

DATE_COLUMN = "date"
DEFAULT_TIMEZONE = "UTC"
TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"


def _localize(value: datetime, tz: pytz.BaseTzInfo) -> datetime:
    if value.tzinfo is None:
        return tz.localize(value)
    return value.astimezone(tz)


def load_csv(path: str | Path, timezone: str = DEFAULT_TIMEZONE) -> SeriesTable:
    """
    Parse an ETT-layout CSV file.

    Args:
        path: CSV file
        timezone: IANA zone for naive timestamps

    Returns:
        SeriesTable with one channel per non-date column

    Raises:
        FileNotFoundError: Path does not exist
        DataError: Wrong header, empty file, unparseable or missing cell, or
            timestamps that do not strictly increase (message names the file row)
    """
    source = Path(path)
    if not source.exists():
        raise FileNotFoundError(f"CSV file not found: {source}")
    tz = pytz.timezone(timezone)

    timestamps: list[datetime] = []
    rows: list[list[float]] = []
    # utf-8-sig handles a BOM if present
    with open(source, "r", encoding="utf-8-sig", newline="") as f:
        reader = csv.DictReader(f)
        fields = reader.fieldnames
        if not fields:
            raise DataError(f"{source}: no data rows")
        if fields[0].strip().lower() != DATE_COLUMN:
            raise DataError(f"{source}: first column must be '{DATE_COLUMN}', got '{fields[0]}'")
        channels = [name.strip() for name in fields[1:]]
        if not channels:
            raise DataError(f"{source}: no channel columns after '{DATE_COLUMN}'")

        for record in reader:
            line = reader.line_num
            raw_date = record.get(fields[0])
            if raw_date is None or not raw_date.strip():
                raise DataError(f"{source}: row {line}: missing timestamp")
            try:
                stamp = _localize(datetime.fromisoformat(raw_date.strip()), tz)
            except ValueError as exc:
                raise DataError(f"{source}: row {line}: bad timestamp {raw_date!r}") from exc
            if timestamps and stamp <= timestamps[-1]:
                raise DataError(
                    f"{source}: row {line}: timestamp {raw_date.strip()} does not increase "
                    f"(previous {timestamps[-1].strftime(TIMESTAMP_FORMAT)})"
                )

            values = []
            for field, name in zip(fields[1:], channels):
                cell = record.get(field)
                if cell is None or not cell.strip():
                    raise DataError(f"{source}: row {line}: missing value in column '{name}'")
                try:
                    number = float(cell)
                except ValueError as exc:
                    raise DataError(
                        f"{source}: row {line}: non-numeric value {cell!r} in column '{name}'"
                    ) from exc
                if not math.isfinite(number):
                    raise DataError(f"{source}: row {line}: missing value in column '{name}'")
                values.append(number)
            timestamps.append(stamp)
            rows.append(values)

    if not rows:
        raise DataError(f"{source}: no data rows")
    logger.debug("csv_loaded", path=str(source), rows=len(rows), channels=len(channels))
    return SeriesTable(
        timestamps=tuple(timestamps),
        values=np.asarray(rows, dtype=np.float64),
        channel_names=tuple(channels),
    )


def write_csv(table: SeriesTable, path: str | Path) -> Path:
    """
    Write a SeriesTable in the layout ``load_csv`` reads.

    Values are written with repr precision so a reload is exact.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8", newline="") as f:
        _write_rows(table, f)
    return target


def dumps_csv(table: SeriesTable) -> str:
    """``write_csv`` to a string."""
    buffer = io.StringIO()
    _write_rows(table, buffer)
    return buffer.getvalue()


def _write_rows(table: SeriesTable, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([DATE_COLUMN, *table.channel_names])
    for stamp, row in zip(table.timestamps, table.values):
        writer.writerow([stamp.strftime(TIMESTAMP_FORMAT), *(repr(float(v)) for v in row)])


class EttCsvAdapter:
    """
    CSV adapter bound to one configured dataset.

    Args:
        config: Data source entry containing:
            - root_path: Directory holding the CSV (required)
            - path_template: Path template with {root_path} and {name} (required)
            - timezone: Zone for naive timestamps (default: "UTC")
        dataset_name: Logical dataset name substituted for {name}

    Example:
        >>> adapter = EttCsvAdapter(
        ...     {"root_path": "data/ETT-small", "path_template": "{root_path}/{name}.csv"},
        ...     "ETTh1",
        ... )
        >>> table = adapter.read_table()
    """

    def __init__(self, config: dict[str, Any], dataset_name: str):
        required_keys = ["root_path", "path_template"]
        missing = [k for k in required_keys if k not in config]
        if missing:
            raise ValueError(f"Missing required config keys: {missing}")

        self.config = config
        self.dataset_name = dataset_name
        self.root_path = Path(config["root_path"]).expanduser()
        self.timezone = config.get("timezone", DEFAULT_TIMEZONE)
        self.file_path = Path(
            config["path_template"].format(root_path=str(self.root_path), name=dataset_name)
        )

    def read_table(self) -> SeriesTable:
        """Load the dataset's full table."""
        return load_csv(self.file_path, timezone=self.timezone)
