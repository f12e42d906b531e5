"""Sliding (lookback, horizon) windows over a split segment."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from library.adapters.models.series_table import SeriesTable
from library.adapters.sources import SplitBoundaries
from library.datasets.splits import DEFAULT_RATIOS, SPLITS, SplitSpec, make_splits
from library.errors import DataError


@dataclass(frozen=True)
class WindowSample:
    """x: (C, lookback) input, y: (C, horizon) target, origin: first input row."""

    x: np.ndarray
    y: np.ndarray
    origin: int


class WindowDataset:
    """
    Windows starting at every row of a segment.

    Args:
        values: (T, C) normalized series
        start: First row of the segment
        stop: One past the last row of the segment
        lookback: Input length
        horizon: Target length
    """

    def __init__(self, values: np.ndarray, start: int, stop: int, lookback: int, horizon: int):
        if not 0 <= start <= stop <= values.shape[0]:
            raise DataError(f"segment [{start}, {stop}) outside {values.shape[0]} rows")
        self.values = values
        self.start = start
        self.stop = stop
        self.lookback = lookback
        self.horizon = horizon

    def __len__(self) -> int:
        return max(0, self.stop - self.start - self.lookback - self.horizon + 1)

    def __getitem__(self, index: int) -> WindowSample:
        if not 0 <= index < len(self):
            raise IndexError(f"window {index} out of range for {len(self)} windows")
        origin = self.start + index
        split = origin + self.lookback
        return WindowSample(
            x=self.values[origin:split].T.copy(),
            y=self.values[split : split + self.horizon].T.copy(),
            origin=origin,
        )

    def stack(self, indices: Sequence[int] | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Inputs (B, C, lookback) and targets (B, C, horizon) for window ``indices``."""
        origins = self.start + np.asarray(indices, dtype=np.int64)
        x_idx = origins[:, None] + np.arange(self.lookback)[None, :]
        y_idx = origins[:, None] + self.lookback + np.arange(self.horizon)[None, :]
        x = np.transpose(self.values[x_idx], (0, 2, 1))
        y = np.transpose(self.values[y_idx], (0, 2, 1))
        return np.ascontiguousarray(x), np.ascontiguousarray(y)

    def batches(
        self, batch_size: int, shuffle: bool = False, seed: int = 0
    ) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """
        Yield (x, y) batches covering every window once.

        Args:
            batch_size: Windows per batch (the last batch may be smaller)
            shuffle: Permute window order with ``seed``
            seed: Permutation seed
        """
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        order = np.arange(len(self))
        if shuffle:
            order = np.random.default_rng(seed).permutation(order)
        for begin in range(0, len(order), batch_size):
            yield self.stack(order[begin : begin + batch_size])


@dataclass(frozen=True)
class ForecastTask:
    """A dataset prepared for training: table, split spec and one window set per split."""

    table: SeriesTable
    spec: SplitSpec
    windows: dict[str, WindowDataset]
    normalized: bool = True

    @property
    def channel_names(self) -> tuple[str, ...]:
        return self.table.channel_names

    def split(self, name: str) -> WindowDataset:
        if name not in self.windows:
            raise DataError(f"unknown split {name!r}; choose from {', '.join(SPLITS)}")
        return self.windows[name]


def build_task(
    table: SeriesTable,
    lookback: int,
    horizon: int,
    ratios: Sequence[float] = DEFAULT_RATIOS,
    boundaries: SplitBoundaries | None = None,
    normalize: bool = True,
    instance_norm: bool = True,
) -> ForecastTask:
    """Split ``table``, z-score it with train statistics and build window sets."""
    spec = make_splits(table, lookback, horizon, ratios, boundaries, instance_norm)
    values = spec.normalize(table.values) if normalize else table.values.copy()
    windows = {
        name: WindowDataset(values, start, stop, lookback, horizon)
        for name, (start, stop) in spec.segments.items()
    }
    return ForecastTask(table=table, spec=spec, windows=windows, normalized=normalize)
