"""Wall-time comparison of the sequential and parallel scan kernels."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np
import structlog

from library.numerics import as_dtype
from library.sscan.scan import parallel_scan, sequential_scan

logger = structlog.get_logger(__name__)

ScanImpl = Literal["seq", "par"]


@dataclass(frozen=True)
class BenchRow:
    """One scan-bench measurement."""

    length: int
    impl: str
    wall_ms: float
    max_abs_diff_vs_seq: float

    def as_row(self) -> dict[str, object]:
        return {
            "L": self.length,
            "impl": self.impl,
            "wall_ms": round(self.wall_ms, 4),
            "max_abs_diff_vs_seq": self.max_abs_diff_vs_seq,
        }


def random_pairs(
    length: int,
    lane_shape: tuple[int, ...],
    rng: np.random.Generator,
    dtype: str = "float64",
) -> tuple[np.ndarray, np.ndarray]:
    """Decays in (0, 1) and unit-scale drives, the regime produced by discretize."""
    resolved = as_dtype(dtype)
    a = rng.uniform(0.05, 0.999, size=(length, *lane_shape)).astype(resolved)
    b = rng.normal(0.0, 1.0, size=(length, *lane_shape)).astype(resolved)
    return a, b


def scan_benchmark(
    lengths: Iterable[int],
    impls: Iterable[ScanImpl] = ("seq", "par"),
    *,
    lane_shape: tuple[int, ...] = (2, 4, 8, 8),
    dtype: str = "float64",
    seed: int = 0,
    workers: int = 1,
    repeats: int = 3,
) -> list[BenchRow]:
    """
    Time each kernel on random inputs; the sequential result is the reference.

    Args:
        lengths: Sequence lengths L
        impls: Kernels to time ("seq", "par")
        lane_shape: Non-time shape (batch, C, D, N)
        dtype: float32 or float64
        seed: RNG seed for the inputs
        workers: Threads for the parallel kernel
        repeats: Timed repetitions; the minimum is reported

    Returns:
        One BenchRow per (L, impl)
    """
    rng = np.random.default_rng(seed)
    rows: list[BenchRow] = []
    impls = tuple(impls)
    for length in lengths:
        a, b = random_pairs(length, lane_shape, rng, dtype)
        reference = sequential_scan(a, b)
        for impl in impls:
            best = float("inf")
            result = reference
            for _ in range(max(1, repeats)):
                start = time.perf_counter()
                if impl == "seq":
                    result = sequential_scan(a, b)
                elif impl == "par":
                    result = parallel_scan(a, b, workers=workers)
                else:
                    raise ValueError(f"unknown scan implementation {impl!r}")
                best = min(best, (time.perf_counter() - start) * 1000.0)
            diff = float(np.max(np.abs(result - reference), initial=0.0))
            rows.append(BenchRow(length=length, impl=impl, wall_ms=best, max_abs_diff_vs_seq=diff))
            logger.info("scan_bench", L=length, impl=impl, wall_ms=round(best, 3), max_diff=diff)
    return rows
