"""Selective state-space inner loop: parameters, discretization, scans and readout."""

from library.sscan.bench import BenchRow, scan_benchmark
from library.sscan.scan import (
    parallel_scan,
    scan_parallel,
    scan_sequential,
    selective_scan,
    sequential_scan,
)
from library.sscan.selective import (
    DiscretizedStep,
    SelectiveParams,
    discretize,
    readout,
    selectivize,
)

__all__ = [
    "BenchRow",
    "DiscretizedStep",
    "SelectiveParams",
    "discretize",
    "parallel_scan",
    "readout",
    "scan_benchmark",
    "scan_parallel",
    "scan_sequential",
    "selective_scan",
    "selectivize",
    "sequential_scan",
]
