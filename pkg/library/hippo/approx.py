"""
Online function approximation with the LegS operator.

A streamed signal u is compressed into N Legendre coefficients c(T) of its
whole history [0, T]. The batch oracle ``project_coefficients`` evaluates the
same coefficients directly by quadrature:

    c_n(T) = ∫_{-1}^{1} u(T (s + 1) / 2) g_n(s) ds

so that u(t) ≈ Σ_n c_n g_n(2t/T − 1) on [0, T].

The ODE is singular at T = 0. Integration starts at
t_0 = max(first sample, START_FRACTION · T_final) and uses explicit midpoint
steps whose size is the sample spacing divided by ``substeps``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np
import structlog

from library.errors import DomainError, NumericError
from library.hippo.legs import LegsOperator, build_legs
from library.legendre import gauss_legendre, normalized_table

logger = structlog.get_logger(__name__)

START_FRACTION = 1e-2
DOMAIN_SLACK = 1e-9

InitialState = Literal["zero", "hold", "linear"]
StreamInitial = Literal["zero", "hold"]
Signal = Sequence[tuple[float, float]] | np.ndarray


@dataclass(frozen=True)
class CoeffTrajectory:
    """
    Coefficients c(T) at every sample time.

    Attributes:
        times: (T,) strictly increasing, positive
        coeffs: (T, N) coefficient vectors
        start_time: Clamped integration start t_0
        initial: Initial-state convention used at t_0
    """

    times: np.ndarray
    coeffs: np.ndarray
    start_time: float
    initial: str = "zero"

    def __post_init__(self) -> None:
        if self.times.ndim != 1 or self.coeffs.ndim != 2:
            raise ValueError("times must be 1-D and coeffs 2-D")
        if self.coeffs.shape[0] != self.times.shape[0]:
            raise ValueError(
                f"{self.times.shape[0]} times but {self.coeffs.shape[0]} coefficient rows"
            )
        if self.times[0] <= 0 or np.any(np.diff(self.times) <= 0):
            raise DomainError("trajectory times must be positive and strictly increasing")

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def final(self) -> np.ndarray:
        return self.coeffs[-1]


def _as_samples(signal: Signal) -> tuple[np.ndarray, np.ndarray]:
    samples = np.asarray(signal, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[1] != 2:
        raise ValueError(f"signal must be a sequence of (t, u) pairs, got shape {samples.shape}")
    times, values = samples[:, 0].copy(), samples[:, 1].copy()
    if times.shape[0] < 2:
        raise DomainError(f"need at least 2 samples, got {times.shape[0]}")
    steps = np.diff(times)
    if np.any(steps <= 0):
        bad = int(np.argmax(steps <= 0)) + 1
        raise DomainError(
            f"sample times must be strictly increasing; t[{bad}] = {times[bad]} "
            f"follows t[{bad - 1}] = {times[bad - 1]}"
        )
    if not np.all(np.isfinite(samples)):
        raise NumericError("signal contains non-finite samples")
    return times, values


def _initial_state(
    op: LegsOperator, initial: InitialState, u0: float, slope: float = 0.0, t0: float = 0.0
) -> np.ndarray:
    c = np.zeros(op.n, dtype=np.float64)
    if initial == "hold":
        # exact LegS state of the constant u0 on [0, t_0]
        c[0] = np.sqrt(2.0) * u0
    elif initial == "linear":
        # exact LegS state of u0 + slope (t - t_0) on [0, t_0]
        half_rise = 0.5 * slope * t0
        c[0] = np.sqrt(2.0) * (u0 - half_rise)
        if op.n > 1:
            c[1] = np.sqrt(2.0 / 3.0) * half_rise
    elif initial != "zero":
        raise ValueError(f"initial must be 'zero', 'hold' or 'linear', got {initial!r}")
    return c


def _start_slope(times: np.ndarray, values: np.ndarray, t_start: float) -> float:
    i = int(np.searchsorted(times, t_start, side="right")) - 1
    i = min(max(i, 0), times.shape[0] - 2)
    return float((values[i + 1] - values[i]) / (times[i + 1] - times[i]))


def _midpoint_step(
    op: LegsOperator, c: np.ndarray, t: float, h: float, u_start: float, u_mid: float
) -> np.ndarray:
    k1 = op.derivative(c, u_start, t)
    k2 = op.derivative(c + 0.5 * h * k1, u_mid, t + 0.5 * h)
    return c + h * k2


def legs_online_approx(
    signal: Signal,
    n: int,
    *,
    initial: InitialState = "zero",
    substeps: int = 1,
    start_fraction: float = START_FRACTION,
) -> CoeffTrajectory:
    """
    Step the LegS coefficient ODE along a sampled signal.

    The signal is linearly interpolated between samples. Sample times before
    the clamped start t_0 report the initial state.

    Args:
        signal: (t, u) pairs with strictly increasing t and t[0] > 0
        n: State size N
        initial: "zero" starts from c(t_0) = 0; "hold" starts from the state of a
            signal held at u(t_0) on [0, t_0]; "linear" from the state of the first sample
            segment extended back to 0
        substeps: Midpoint steps per sample interval (10 gives the reference run)
        start_fraction: Start clamp as a fraction of the final time

    Returns:
        CoeffTrajectory with c(t) at every sample time

    Raises:
        DomainError: Non-monotone or non-positive times, fewer than 2 samples
        NumericError: A step produced a non-finite state
    """
    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps}")
    times, values = _as_samples(signal)
    if times[0] <= 0:
        raise DomainError(f"first sample time must be > 0, got {times[0]}")
    op = build_legs(n)
    t_start = max(float(times[0]), start_fraction * float(times[-1]))

    u0 = float(np.interp(t_start, times, values))
    c = _initial_state(op, initial, u0, _start_slope(times, values, t_start), t_start)
    coeffs = np.zeros((times.shape[0], n), dtype=np.float64)
    current = t_start
    for i, t_i in enumerate(times):
        if t_i <= t_start:
            coeffs[i] = c
            continue
        h = (t_i - current) / substeps
        for k in range(substeps):
            t_k = current + k * h
            u_start = float(np.interp(t_k, times, values))
            u_mid = float(np.interp(t_k + 0.5 * h, times, values))
            c = _midpoint_step(op, c, t_k, h, u_start, u_mid)
        if not np.all(np.isfinite(c)):
            raise NumericError(f"LegS step {i} (t = {t_i}) produced a non-finite state")
        coeffs[i] = c
        current = float(t_i)

    logger.debug(
        "legs_approx_complete",
        n=n,
        samples=int(times.shape[0]),
        start_time=t_start,
        initial=initial,
        substeps=substeps,
    )
    return CoeffTrajectory(times=times, coeffs=coeffs, start_time=t_start, initial=initial)


def _check_query(t: np.ndarray, horizon: float) -> None:
    if horizon <= 0:
        raise DomainError(f"horizon must be > 0, got {horizon}")
    if np.any(t < -DOMAIN_SLACK) or np.any(t > horizon + DOMAIN_SLACK):
        raise DomainError(f"query time outside [0, {horizon}]")


def reconstruct(c: np.ndarray, horizon: float, t: float) -> float:
    """u_hat(t) = Σ_n c_n g_n(2t/T − 1) for 0 ≤ t ≤ T."""
    return float(reconstruct_curve(c, horizon, np.array([t]))[0])


def reconstruct_curve(c: np.ndarray, horizon: float, ts: np.ndarray) -> np.ndarray:
    """Vectorized ``reconstruct`` over query times ``ts``."""
    coeffs = np.asarray(c, dtype=np.float64)
    query = np.asarray(ts, dtype=np.float64)
    _check_query(query, horizon)
    s = np.clip(2.0 * query / horizon - 1.0, -1.0, 1.0)
    return coeffs @ normalized_table(coeffs.shape[0] - 1, s)


def project_coefficients(
    u: Signal | Callable[[np.ndarray], np.ndarray],
    horizon: float,
    n: int,
    *,
    points: int | None = None,
) -> np.ndarray:
    """
    Coefficients of u on [0, T] by direct quadrature.

    The signal is linearly interpolated on its grid and each grid interval is
    integrated exactly with a Gauss–Legendre rule.

    Args:
        u: (t, u) samples whose grid covers [0, T], or a callable evaluated on a
            uniform grid of ``points`` nodes
        horizon: T
        n: State size N
        points: Grid size when ``u`` is callable (default 64 (N + 1))

    Returns:
        (N,) coefficient vector

    Raises:
        DomainError: Grid has fewer than 4 (N + 1) points or does not cover [0, T]
    """
    if horizon <= 0:
        raise DomainError(f"horizon must be > 0, got {horizon}")
    minimum = 4 * (n + 1)
    if callable(u):
        grid = np.linspace(0.0, horizon, points or 64 * (n + 1))
        times, values = _as_samples(np.column_stack([grid, u(grid)]))
    else:
        times, values = _as_samples(u)
    if times.shape[0] < minimum:
        raise DomainError(
            f"grid too coarse: {times.shape[0]} points, need at least {minimum} for N = {n}"
        )
    if times[0] > DOMAIN_SLACK or times[-1] < horizon - DOMAIN_SLACK:
        raise DomainError(f"grid [{times[0]}, {times[-1]}] does not cover [0, {horizon}]")

    inner = times[(times > 0.0) & (times < horizon)]
    breaks = np.concatenate([[0.0], inner, [horizon]])
    u_breaks = np.interp(breaks, times, values)

    # integrand is u (linear) times g_n (degree n - 1): exact with n // 2 + 2 nodes
    rule = gauss_legendre(n // 2 + 2)
    left, right = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (right - left)
    nodes = left + half * (rule.nodes[None, :] + 1.0)
    frac = (nodes - left) / (right - left)
    u_nodes = u_breaks[:-1, None] + frac * (u_breaks[1:, None] - u_breaks[:-1, None])
    weights = half * rule.weights[None, :] * (2.0 / horizon)

    s = np.clip(2.0 * nodes / horizon - 1.0, -1.0, 1.0)
    table = normalized_table(n - 1, s)
    return np.einsum("nij,ij->n", table, u_nodes * weights)


class LegsApproximator:
    """
    Streaming LegS approximation.

    ``update`` advances the coefficients one sample at a time with a midpoint
    step over the interval since the previous sample. There is no start clamp:
    integration begins at the first sample, which must be positive.

    Args:
        n: State size N
        initial: "zero" or "hold", as in ``legs_online_approx``

    Example:
        >>> approx = LegsApproximator(n=8, initial="hold")
        >>> for t, u in samples:
        ...     c = approx.update(t, u)
        >>> approx.reconstruct(approx.time)
    """

    def __init__(self, n: int, initial: StreamInitial = "hold"):
        self.op = build_legs(n)
        if initial not in ("zero", "hold"):
            raise ValueError(f"streaming initial must be 'zero' or 'hold', got {initial!r}")
        self.initial = initial
        self._last: tuple[float, float] | None = None
        self._coeffs: np.ndarray | None = None
        self._count = 0

    def calculate(self, signal: Signal) -> CoeffTrajectory:
        """Coefficients for a whole signal (stateless, no effect on the stream)."""
        return legs_online_approx(signal, self.op.n, initial=self.initial, start_fraction=0.0)

    def update(self, t: float, u: float) -> np.ndarray | None:
        """Feed one sample; returns c(t) once two samples have been seen."""
        if not np.isfinite(u):
            raise NumericError(f"non-finite sample at t = {t}")
        if self._last is None:
            if t <= 0:
                raise DomainError(f"first sample time must be > 0, got {t}")
            self._coeffs = _initial_state(self.op, self.initial, u)
        else:
            t_prev, u_prev = self._last
            if t <= t_prev:
                raise DomainError(f"sample times must be strictly increasing: {t} after {t_prev}")
            assert self._coeffs is not None
            u_mid = 0.5 * (u_prev + u)
            c = _midpoint_step(self.op, self._coeffs, t_prev, t - t_prev, u_prev, u_mid)
            if not np.all(np.isfinite(c)):
                raise NumericError(f"LegS step {self._count} (t = {t}) produced a non-finite state")
            self._coeffs = c
        self._last = (t, u)
        self._count += 1
        return self.value

    def reset(self) -> None:
        """Forget the stream; N and the initial convention are kept."""
        self._last = None
        self._coeffs = None
        self._count = 0

    @property
    def value(self) -> np.ndarray | None:
        if not self.is_ready or self._coeffs is None:
            return None
        return self._coeffs.copy()

    @property
    def is_ready(self) -> bool:
        return self._count >= 2

    @property
    def time(self) -> float | None:
        return None if self._last is None else self._last[0]

    def reconstruct(self, t: float) -> float:
        """Evaluate the current approximation at ``t`` in [0, time]."""
        if self._coeffs is None or self._last is None:
            raise ValueError("no samples seen yet")
        return reconstruct(self._coeffs, self._last[0], t)
