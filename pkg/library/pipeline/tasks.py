"""Resolve a run's data section into a windowed ForecastTask."""

from __future__ import annotations

from pathlib import Path

import structlog

from library.adapters.ett_csv import load_csv
from library.adapters.models.series_table import SeriesTable
from library.adapters.sources import DataSourceResolver, SplitBoundaries
from library.datasets.synth import generate
from library.datasets.windows import ForecastTask, build_task
from library.pipeline.config import DataConfig

logger = structlog.get_logger(__name__)


def load_table(
    data: DataConfig, sources_path: str | Path | None = None
) -> tuple[SeriesTable, SplitBoundaries | None]:
    """The configured series plus any fixed split boundaries from the registry."""
    if data.dataset is not None:
        resolver = DataSourceResolver(sources_path)
        source = resolver.get(data.dataset)
        table = resolver.adapter(data.dataset).read_table()
        return table, source.boundaries
    if data.csv is not None:
        return load_csv(data.csv), None
    assert data.synth is not None
    table, _ = generate(data.synth)
    return table, None


def prepare_task(data: DataConfig, sources_path: str | Path | None = None) -> ForecastTask:
    table, boundaries = load_table(data, sources_path)
    task = build_task(
        table,
        lookback=data.lookback,
        horizon=data.horizon,
        ratios=data.ratios,
        boundaries=boundaries,
        normalize=data.normalize,
        instance_norm=data.instance_norm,
    )
    logger.info(
        "task_prepared",
        source=data.source_label,
        rows=table.n_rows,
        channels=table.n_channels,
        train_windows=len(task.split("train")),
        val_windows=len(task.split("val")),
        test_windows=len(task.split("test")),
    )
    return task
