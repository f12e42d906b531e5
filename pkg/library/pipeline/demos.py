"""HiPPO-LegS reconstruction demo and Legendre basis self-check."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import structlog

from library.adapters.ett_csv import load_csv
from library.errors import DataError
from library.hippo import InitialState, legs_online_approx, reconstruct_curve
from library.legendre import (
    count_degree,
    count_total,
    enumerate_multi_indices,
    gauss_legendre,
    gram_matrix,
)

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class HippoDemoResult:
    """Sample grid, signal, reconstruction from the final coefficients, and its error."""

    t: np.ndarray
    u: np.ndarray
    u_hat: np.ndarray
    n: int

    @property
    def abs_err(self) -> np.ndarray:
        return np.abs(self.u_hat - self.u)

    @property
    def rel_l2(self) -> float:
        return float(np.linalg.norm(self.u_hat - self.u) / max(np.linalg.norm(self.u), 1e-300))

    def to_csv(self) -> str:
        lines = ["t,u,u_hat,abs_err"]
        for t, u, u_hat, err in zip(self.t, self.u, self.u_hat, self.abs_err):
            lines.append(f"{t!r},{u!r},{u_hat!r},{err!r}")
        return "\n".join(lines) + "\n"


def demo_signal(
    spec: str, t_start: float = 1.0, t_end: float = 10.0, dt: float = 0.005
) -> tuple[np.ndarray, np.ndarray]:
    """
    Sampled signal for the demo.

    Args:
        spec: "sin", "square", or "csv:<path>" (first channel, unit spacing from ``t_start``)
        t_start: First sample time (> 0)
        t_end: Last sample time
        dt: Sample spacing for the analytic signals
    """
    if spec.startswith("csv:"):
        table = load_csv(spec[4:])
        values = table.values[:, 0]
        return t_start + np.arange(values.shape[0], dtype=np.float64), values.copy()
    if t_start <= 0 or t_end <= t_start or dt <= 0:
        raise DataError(f"need 0 < t_start < t_end and dt > 0, got {t_start}, {t_end}, {dt}")
    t = np.arange(t_start, t_end + 0.5 * dt, dt)
    if spec == "sin":
        return t, np.sin(t)
    if spec == "square":
        return t, np.where(np.sin(t) >= 0.0, 1.0, -1.0)
    raise DataError(f"unknown demo signal {spec!r}; use sin, square or csv:<path>")


def hippo_demo(
    signal: str = "sin",
    n: int = 32,
    t_start: float = 1.0,
    t_end: float = 10.0,
    dt: float = 0.005,
    initial: InitialState = "linear",
) -> HippoDemoResult:
    """
    Approximate a signal online and reconstruct it from the final coefficients.

    The history before the first sample is filled in by ``initial`` (see
    ``legs_online_approx``); errors are reported on the sampled range only.
    """
    t, u = demo_signal(signal, t_start, t_end, dt)
    trajectory = legs_online_approx(np.column_stack([t, u]), n, initial=initial)
    u_hat = reconstruct_curve(trajectory.final, trajectory.horizon, t)
    result = HippoDemoResult(t=t, u=u, u_hat=u_hat, n=n)
    logger.info(
        "hippo_demo",
        signal=signal,
        n=n,
        initial=initial,
        samples=t.shape[0],
        rel_l2=result.rel_l2,
    )
    return result


@dataclass(frozen=True)
class BasisCheck:
    channels: int
    max_deg: int
    max_off_diagonal: float
    max_diagonal_error: float
    counts_match: bool
    count_total: int

    @property
    def ok(self) -> bool:
        worst = max(self.max_off_diagonal, self.max_diagonal_error)
        return self.counts_match and worst <= 1e-10


def basis_check(channels: int = 2, max_deg: int = 3) -> BasisCheck:
    """Gram-matrix orthogonality and the multi-index counting formulas."""
    indices = enumerate_multi_indices(channels, max_deg)
    gram = gram_matrix(channels, max_deg, gauss_legendre(max_deg + 2))
    expected = np.array([np.prod([2.0 / (2 * k + 1) for k in idx]) for idx in indices])
    off = gram - np.diag(np.diag(gram))
    counts_match = all(
        count_degree(channels, d) == len(enumerate_multi_indices(channels, d))
        for d in range(max_deg + 1)
    )
    check = BasisCheck(
        channels=channels,
        max_deg=max_deg,
        max_off_diagonal=float(np.max(np.abs(off))) if off.size else 0.0,
        max_diagonal_error=float(np.max(np.abs(np.diag(gram) - expected))),
        counts_match=counts_match,
        count_total=count_total(channels, max_deg),
    )
    logger.info(
        "basis_check",
        channels=channels,
        max_deg=max_deg,
        max_off_diagonal=check.max_off_diagonal,
        ok=check.ok,
    )
    return check

