"""
Train/validation/test splits and z-score normalization.

Splits follow the long-horizon benchmark convention: with T rows and ratios
(r_train, r_val, r_test),

    n_train = int(T · r_train), n_test = int(T · r_test), n_val = T − n_train − n_test
    train rows  [0, n_train)
    val rows    [n_train − lookback, n_train + n_val)
    test rows   [T − n_test − lookback, T)

so validation and test windows reach back ``lookback`` rows for context while
their targets stay inside their own span. Datasets with fixed boundaries use
(train_end, val_end, test_end) in place of the ratio-derived ends.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from library.adapters.models.series_table import SeriesTable
from library.adapters.sources import SplitBoundaries
from library.errors import DataError

DEFAULT_RATIOS = (0.7, 0.1, 0.2)
SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class SplitSpec:
    """
    Row segments per split plus train-set normalization statistics.

    Attributes:
        segments: split name -> (start, stop) rows, context included
        target_starts: split name -> first row a target may occupy
        mean: (C,) train mean per channel
        std: (C,) train std per channel (> 0)
        lookback: Input window length
        horizon: Target window length
        instance_norm: Whether the model normalizes each window itself
    """

    segments: dict[str, tuple[int, int]]
    target_starts: dict[str, int]
    mean: np.ndarray
    std: np.ndarray
    lookback: int
    horizon: int
    instance_norm: bool = True

    def window_count(self, split: str) -> int:
        start, stop = self.segments[split]
        return stop - start - self.lookback - self.horizon + 1

    def normalize(self, values: np.ndarray) -> np.ndarray:
        """Z-score (T, C) values with the train statistics."""
        return (values - self.mean) / self.std

    def denormalize(self, values: np.ndarray, channel_axis: int = -1) -> np.ndarray:
        """Inverse of ``normalize``; ``channel_axis`` locates C in ``values``."""
        shape = [1] * values.ndim
        shape[channel_axis] = -1
        return values * self.std.reshape(shape) + self.mean.reshape(shape)

    def as_metadata(self) -> dict[str, object]:
        return {
            "segments": {k: list(v) for k, v in self.segments.items()},
            "mean": [float(v) for v in self.mean],
            "std": [float(v) for v in self.std],
            "lookback": self.lookback,
            "horizon": self.horizon,
            "instance_norm": self.instance_norm,
        }


def _ratio_ends(rows: int, ratios: Sequence[float]) -> tuple[int, int, int]:
    n_train = int(rows * ratios[0])
    n_test = int(rows * ratios[2])
    n_val = rows - n_train - n_test
    return n_train, n_train + n_val, rows


def _segments(
    ends: tuple[int, int, int], lookback: int
) -> tuple[dict[str, tuple[int, int]], dict[str, int]]:
    train_end, val_end, test_end = ends
    segments = {
        "train": (0, train_end),
        "val": (train_end - lookback, val_end),
        "test": (val_end - lookback, test_end),
    }
    target_starts = {"train": lookback, "val": train_end, "test": val_end}
    return segments, target_starts


def _feasible(ends: tuple[int, int, int], lookback: int, horizon: int) -> bool:
    train_end, val_end, test_end = ends
    if train_end - lookback < 0:
        return False
    segments, _ = _segments(ends, lookback)
    return all(stop - start >= lookback + horizon for start, stop in segments.values())


def minimum_rows(lookback: int, horizon: int, ratios: Sequence[float] = DEFAULT_RATIOS) -> int:
    """Smallest T giving every split at least one window under ``ratios``."""
    rows = lookback + horizon
    limit = int(10 * (lookback + horizon) / max(min(ratios), 1e-3)) + 10
    while rows <= limit:
        if _feasible(_ratio_ends(rows, ratios), lookback, horizon):
            return rows
        rows += 1
    raise DataError(f"ratios {tuple(ratios)} cannot give every split a window")


def _check_ratios(ratios: Sequence[float]) -> None:
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError(f"ratios must be three positive numbers summing to 1, got {tuple(ratios)}")


def make_splits(
    table: SeriesTable,
    lookback: int,
    horizon: int,
    ratios: Sequence[float] = DEFAULT_RATIOS,
    boundaries: SplitBoundaries | None = None,
    instance_norm: bool = True,
) -> SplitSpec:
    """
    Compute split segments and train statistics.

    Args:
        table: Full series
        lookback: Input window length
        horizon: Target window length
        ratios: Train/val/test fractions, used when ``boundaries`` is None
        boundaries: Fixed split ends
        instance_norm: Recorded on the spec for the model

    Returns:
        SplitSpec

    Raises:
        DataError: Too few rows (message states the minimum), boundaries past the
            end of the table, or a channel that is constant on the training rows
    """
    if lookback < 1 or horizon < 1:
        raise DataError(f"lookback and horizon must be >= 1, got {lookback}, {horizon}")
    rows = table.n_rows
    if boundaries is not None:
        ends = (boundaries.train_end, boundaries.val_end, boundaries.test_end)
        if ends[2] > rows:
            raise DataError(f"test_end {ends[2]} is beyond the table's {rows} rows")
        if not _feasible(ends, lookback, horizon):
            raise DataError(
                f"boundaries {ends} leave a split without a full window "
                f"(lookback {lookback} + horizon {horizon})"
            )
    else:
        _check_ratios(ratios)
        ends = _ratio_ends(rows, ratios)
        if not _feasible(ends, lookback, horizon):
            raise DataError(
                f"too few rows: {rows} rows give a split without a full window; "
                f"need at least {minimum_rows(lookback, horizon, ratios)} rows for "
                f"lookback {lookback}, horizon {horizon}, ratios {tuple(ratios)}"
            )

    segments, target_starts = _segments(ends, lookback)
    train_rows = table.values[: ends[0]]
    mean = train_rows.mean(axis=0)
    std = train_rows.std(axis=0)
    constant = [name for name, s in zip(table.channel_names, std) if s == 0.0]
    if constant:
        raise DataError(
            f"channels {constant} are constant on the training rows (std = 0); "
            f"drop them from the dataset"
        )
    return SplitSpec(
        segments=segments,
        target_starts=target_starts,
        mean=mean,
        std=std,
        lookback=lookback,
        horizon=horizon,
        instance_norm=instance_norm,
    )
