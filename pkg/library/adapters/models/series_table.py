"""
Series Table Model.

In-memory multivariate series: one timestamp per row, one column per channel.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

import numpy as np

from library.errors import DataError


@dataclass(frozen=True)
class SeriesTable:
    """
    Multivariate time series.

    Timestamps are strictly increasing and timezone-aware; values are a dense
    (T, C) float64 array with no missing entries.
    """

    timestamps: tuple[datetime, ...]
    values: np.ndarray
    channel_names: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.values.ndim != 2:
            raise DataError(f"values must be (T, C), got shape {self.values.shape}")
        rows, channels = self.values.shape
        if len(self.timestamps) != rows:
            raise DataError(f"{len(self.timestamps)} timestamps for {rows} value rows")
        if len(self.channel_names) != channels:
            raise DataError(f"{len(self.channel_names)} channel names for {channels} columns")
        if len(set(self.channel_names)) != channels:
            raise DataError(f"duplicate channel names: {list(self.channel_names)}")
        if not np.all(np.isfinite(self.values)):
            row = int(np.argwhere(~np.isfinite(self.values))[0, 0])
            raise DataError(f"missing or non-finite value at data row {row}")
        for i in range(1, rows):
            if self.timestamps[i] <= self.timestamps[i - 1]:
                raise DataError(
                    f"timestamps must be strictly increasing: data row {i} "
                    f"({self.timestamps[i].isoformat()}) follows "
                    f"{self.timestamps[i - 1].isoformat()}"
                )

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_channels(self) -> int:
        return int(self.values.shape[1])

    def select(self, channels: list[str]) -> SeriesTable:
        """Subset of channels, in the given order."""
        unknown = [c for c in channels if c not in self.channel_names]
        if unknown:
            raise DataError(f"unknown channels {unknown}; table has {list(self.channel_names)}")
        idx = [self.channel_names.index(c) for c in channels]
        return SeriesTable(self.timestamps, self.values[:, idx].copy(), tuple(channels))

    def head(self, rows: int) -> SeriesTable:
        """First ``rows`` rows."""
        return SeriesTable(self.timestamps[:rows], self.values[:rows].copy(), self.channel_names)
