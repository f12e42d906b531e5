"""Forecast metrics and the metrics JSON-lines stream."""

from __future__ import annotations

import json
import time
from pathlib import Path
from typing import Any

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field

from library.datasets.windows import ForecastTask
from library.errors import DataError
from library.model.forecaster import ForecastModel
from library.sscan.scan import ScanMode

logger = structlog.get_logger(__name__)


class MetricsRecord(BaseModel):
    """
    One evaluation of one split.

    ``epoch`` is None for standalone evaluations; ``wall_ms`` is only filled
    when timing is requested, so seeded runs serialize identically.
    """

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    split: str
    horizon: int = Field(ge=1)
    mse: float = Field(ge=0.0)
    mae: float = Field(ge=0.0)
    epoch: int | None = None
    wall_ms: float | None = None
    variant: str | None = None
    seed: int | None = None
    train_loss: float | None = None

    def to_json(self) -> str:
        return json.dumps(self.model_dump(exclude_none=True), sort_keys=True)


def mse_mae(prediction: np.ndarray, target: np.ndarray) -> tuple[float, float]:
    """Mean squared and mean absolute error over every element."""
    if prediction.shape != target.shape:
        raise ValueError(f"prediction {prediction.shape} and target {target.shape} differ")
    if target.size == 0:
        raise DataError("cannot score an empty set of windows")
    err = np.asarray(prediction, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return float(np.mean(err * err)), float(np.mean(np.abs(err)))


def predict_split(
    model: ForecastModel,
    task: ForecastTask,
    split: str,
    batch_size: int = 256,
    mode: ScanMode = "parallel",
    workers: int = 1,
    chunk: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Predictions and targets, both [windows, C, horizon], for every window of ``split``."""
    windows = task.split(split)
    if len(windows) == 0:
        raise DataError(f"split {split!r} has no windows")
    predictions, targets = [], []
    for x, y in windows.batches(batch_size):
        out = model.forward(x.astype(model.dtype), mode=mode, workers=workers, chunk=chunk)
        predictions.append(out.data)
        targets.append(y)
    return np.concatenate(predictions), np.concatenate(targets).astype(model.dtype)


def evaluate(
    model: ForecastModel,
    task: ForecastTask,
    split: str = "test",
    *,
    batch_size: int = 256,
    mode: ScanMode = "parallel",
    workers: int = 1,
    chunk: int | None = None,
    epoch: int | None = None,
    record_timing: bool = False,
) -> MetricsRecord:
    """
    MSE and MAE over all (window, channel, step) elements of ``split``.

    Scores are on the task's normalized scale.

    Raises:
        DataError: Unknown or empty split
    """
    started = time.perf_counter()
    prediction, target = predict_split(model, task, split, batch_size, mode, workers, chunk)
    mse, mae = mse_mae(prediction, target)
    record = MetricsRecord(
        split=split,
        horizon=int(target.shape[-1]),
        mse=mse,
        mae=mae,
        epoch=epoch,
        variant=model.config.variant,
    )
    if record_timing:
        record.wall_ms = round((time.perf_counter() - started) * 1000.0, 3)
    logger.debug("split_evaluated", split=split, mse=mse, mae=mae, windows=len(target))
    return record


class MetricsWriter:
    """Appends MetricsRecords to a JSON-lines file, one record per line."""

    def __init__(self, path: str | Path, truncate: bool = True):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if truncate:
            self.path.write_text("", encoding="utf-8")

    def write(self, record: MetricsRecord) -> None:
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(record.to_json() + "\n")


def read_metrics(path: str | Path) -> list[dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
