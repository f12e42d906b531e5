"""Forecast the horizon following the last lookback window of a series."""

from __future__ import annotations

import numpy as np
import structlog

from library.adapters.models.series_table import SeriesTable
from library.errors import CheckpointError, DataError
from library.model.checkpoint import Checkpoint

logger = structlog.get_logger(__name__)


def forecast_table(checkpoint: Checkpoint, table: SeriesTable) -> SeriesTable:
    """
    Predict the ``horizon`` rows after ``table`` ends.

    Inputs are normalized with the training statistics stored in the
    checkpoint and predictions are mapped back to the original scale.
    Timestamps continue at the table's last spacing.

    Raises:
        DataError: Channel names differ from training, or fewer rows than the lookback
        CheckpointError: Checkpoint lacks normalization metadata
    """
    model = checkpoint.model
    meta = checkpoint.metadata
    lookback, horizon = model.config.lookback, model.config.horizon

    expected = meta.get("channel_names")
    if expected is not None and list(table.channel_names) != list(expected):
        raise DataError(
            f"channels {list(table.channel_names)} do not match the trained channels {expected}"
        )
    if table.n_rows < max(lookback, 2):
        raise DataError(f"need at least {max(lookback, 2)} rows to forecast, got {table.n_rows}")

    window = table.values[-lookback:]
    normalized = bool(meta.get("normalized", True))
    if normalized:
        stats = meta.get("normalization")
        if not stats:
            raise CheckpointError("checkpoint has no normalization statistics")
        mean, std = np.asarray(stats["mean"]), np.asarray(stats["std"])
        window = (window - mean) / std

    out = model.forward(window.T[None, :, :].astype(model.dtype)).data[0].T
    if normalized:
        out = out * std + mean

    step = table.timestamps[-1] - table.timestamps[-2]
    timestamps = tuple(table.timestamps[-1] + (i + 1) * step for i in range(horizon))
    logger.info("forecast_complete", horizon=horizon, channels=table.n_channels)
    return SeriesTable(
        timestamps=timestamps,
        values=np.asarray(out, dtype=np.float64),
        channel_names=table.channel_names,
    )
