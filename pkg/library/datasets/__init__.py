"""Splits, normalization, windowing and the synthetic CDT generator."""

from library.datasets.splits import DEFAULT_RATIOS, SPLITS, SplitSpec, make_splits, minimum_rows
from library.datasets.synth import SynthConfig, generate, synth_cdt, write_synthetic
from library.datasets.windows import ForecastTask, WindowDataset, WindowSample, build_task

__all__ = [
    "DEFAULT_RATIOS",
    "ForecastTask",
    "SPLITS",
    "SplitSpec",
    "SynthConfig",
    "WindowDataset",
    "WindowSample",
    "build_task",
    "generate",
    "make_splits",
    "minimum_rows",
    "synth_cdt",
    "write_synthetic",
]
