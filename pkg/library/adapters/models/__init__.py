"""
Adapter Models.

Data models for the CSV adapter.
"""

from library.adapters.models.series_table import SeriesTable

__all__ = ["SeriesTable"]
