"""
Data Adapters.

Readers and writers for on-disk series, and the registry that maps logical
dataset names to them.

Available Adapters:
    - EttCsvAdapter: ETT-layout CSV (date column followed by numeric channels)

Usage:
    Configure datasets in config/data_sources.yaml:

    data_sources:
      ETTh1:
        adapter: ett_csv
        root_path: "data/ETT-small"
        path_template: "{root_path}/{name}.csv"

    Then reference them in run configs (experiments/*.yaml):

    data:
      dataset: ETTh1
"""

from library.adapters.ett_csv import EttCsvAdapter, dumps_csv, load_csv, write_csv
from library.adapters.models import SeriesTable
from library.adapters.sources import (
    DataSourceConfig,
    DataSourceResolver,
    SplitBoundaries,
)

__all__ = [
    "DataSourceConfig",
    "DataSourceResolver",
    "EttCsvAdapter",
    "SeriesTable",
    "SplitBoundaries",
    "dumps_csv",
    "load_csv",
    "write_csv",
]
