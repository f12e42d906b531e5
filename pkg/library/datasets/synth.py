"""
Synthetic series with channel dependencies that vary over time.

Channel 0 is a base process: a sum of seeded sinusoids plus AR(1) noise.
Every other channel c is driven by channel 0 through the regime's coupling
and carries its own AR(1) noise term scaled by ``noise_std``:

    linear:      x_c(t) = α_c(t) · x_0(t − τ_c)
    polynomial:  x_c(t) = β_c(t) · x_0(t)² + γ_c(t) · x_0(t) · tanh(x_{c−1}(t))
                 (for c = 1 the cross factor is the lagged x_0(t − τ_1))
    switching:   linear on even periods of ``switch_period`` steps, polynomial on odd ones

The sinusoid sum is scaled to unit variance before the base noise is added;
the tanh keeps the chain of polynomial channels bounded.

The coupling strengths α, β, γ drift slowly as offset + amplitude · sin(2πt/P + φ),
with all constants drawn from the seed and reported in the metadata.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Any, Literal

import numpy as np
import pytz
import structlog
from pydantic import BaseModel, ConfigDict, Field

from library.adapters.ett_csv import write_csv
from library.adapters.models.series_table import SeriesTable
from library.errors import DataError

logger = structlog.get_logger(__name__)

Regime = Literal["linear", "polynomial", "switching"]

BASE_AR = 0.8
CHANNEL_AR = 0.5
START_TIME = datetime(2020, 1, 1)


class SynthConfig(BaseModel):
    """
    Generator settings.

    Attributes:
        length: Rows T
        channels: C (>= 2)
        seed: Seed for every random draw
        regime: Coupling regime
        switch_period: Steps per regime segment in ``switching``
        noise_std: Scale of each coupled channel's own AR(1) noise
        base_noise: Scale of the base process's AR(1) noise
        max_lag: Largest lag τ_c drawn for the linear coupling
        alpha: Constant α for every channel instead of the drifting draw
        tau: Constant lag for every channel instead of the seeded draw
        freq_minutes: Timestamp spacing
    """

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    length: int = Field(default=20000, ge=1)
    channels: int = Field(default=8, ge=1)
    seed: int = 7
    regime: Regime = "switching"
    switch_period: int = Field(default=500, ge=1)
    noise_std: float = Field(default=0.1, ge=0.0)
    base_noise: float = Field(default=0.2, ge=0.0)
    max_lag: int = Field(default=4, ge=0)
    alpha: float | None = None
    tau: int | None = Field(default=None, ge=0)
    freq_minutes: int = Field(default=60, ge=1)


@dataclass(frozen=True)
class Drift:
    """offset + amplitude · sin(2π t / period + phase)"""

    offset: float
    amplitude: float
    period: float
    phase: float

    def __call__(self, t: np.ndarray) -> np.ndarray:
        return self.offset + self.amplitude * np.sin(2.0 * np.pi * t / self.period + self.phase)

    def as_dict(self) -> dict[str, float]:
        return {
            "offset": self.offset,
            "amplitude": self.amplitude,
            "period": self.period,
            "phase": self.phase,
        }


def _constant(value: float) -> Drift:
    return Drift(offset=value, amplitude=0.0, period=1.0, phase=0.0)


def _drift(
    rng: np.random.Generator, offset: tuple[float, float], amp: tuple[float, float]
) -> Drift:
    return Drift(
        offset=float(rng.uniform(*offset)),
        amplitude=float(rng.uniform(*amp)),
        period=float(rng.uniform(2000.0, 6000.0)),
        phase=float(rng.uniform(0.0, 2.0 * np.pi)),
    )


def _ar1(rng: np.random.Generator, phi: float, shape: tuple[int, ...]) -> np.ndarray:
    """AR(1) along axis 0 with unit-variance innovations, started at stationarity."""
    eps = rng.normal(0.0, 1.0, size=shape)
    out = np.empty(shape)
    out[0] = eps[0] / math.sqrt(1.0 - phi * phi)
    for t in range(1, shape[0]):
        out[t] = phi * out[t - 1] + eps[t]
    return out


def generate(config: SynthConfig) -> tuple[SeriesTable, dict[str, Any]]:
    """
    Generate the series and the metadata describing it.

    Returns:
        (table, metadata)

    Raises:
        DataError: Fewer than 2 channels
    """
    if config.channels < 2:
        raise DataError(f"synthetic CDT needs at least 2 channels, got {config.channels}")
    rng = np.random.default_rng(config.seed)
    length, channels = config.length, config.channels

    periods = rng.uniform(20.0, 200.0, size=3)
    amplitudes = rng.uniform(0.5, 1.5, size=3)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=3)
    taus = (
        np.full(channels, config.tau, dtype=np.int64)
        if config.tau is not None
        else rng.integers(0, config.max_lag + 1, size=channels)
    )
    taus[0] = 0
    alphas = [
        _constant(config.alpha) if config.alpha is not None else _drift(rng, (0.5, 1.0), (0.2, 0.5))
        for _ in range(channels)
    ]
    betas = [_drift(rng, (0.2, 0.5), (0.1, 0.3)) for _ in range(channels)]
    gammas = [_drift(rng, (0.3, 0.8), (0.1, 0.4)) for _ in range(channels)]
    base_noise = _ar1(rng, BASE_AR, (length + int(taus.max()),))
    channel_noise = _ar1(rng, CHANNEL_AR, (length, channels))

    burn = int(taus.max())
    t_ext = np.arange(-burn, length, dtype=np.float64)
    angles = 2.0 * np.pi * t_ext[None, :] / periods[:, None] + phases[:, None]
    base_ext = np.sum(amplitudes[:, None] * np.sin(angles), axis=0)
    scale = float(base_ext.std()) or 1.0
    base_ext = base_ext / scale + config.base_noise * base_noise
    t = np.arange(length, dtype=np.float64)
    x0 = base_ext[burn:]

    if config.regime == "linear":
        linear_mask = np.ones(length, dtype=bool)
    elif config.regime == "polynomial":
        linear_mask = np.zeros(length, dtype=bool)
    else:
        linear_mask = (np.arange(length) // config.switch_period) % 2 == 0

    values = np.empty((length, channels))
    values[:, 0] = x0
    for c in range(1, channels):
        lagged = base_ext[burn - taus[c] : burn - taus[c] + length]
        cross = lagged if c == 1 else np.tanh(values[:, c - 1])
        linear = alphas[c](t) * lagged
        poly = betas[c](t) * x0 * x0 + gammas[c](t) * x0 * cross
        values[:, c] = np.where(linear_mask, linear, poly) + config.noise_std * channel_noise[:, c]

    tz = pytz.UTC
    step = timedelta(minutes=config.freq_minutes)
    timestamps = tuple(tz.localize(START_TIME + i * step) for i in range(length))
    table = SeriesTable(
        timestamps=timestamps,
        values=values,
        channel_names=tuple(f"x{c}" for c in range(channels)),
    )
    metadata = {
        "generator": "synth_cdt",
        "config": config.model_dump(mode="json"),
        "base": {
            "periods": periods.tolist(),
            "amplitudes": amplitudes.tolist(),
            "phases": phases.tolist(),
            "ar": BASE_AR,
        },
        "channel_ar": CHANNEL_AR,
        "tau": taus.tolist(),
        "alpha": [a.as_dict() for a in alphas],
        "beta": [b.as_dict() for b in betas],
        "gamma": [g.as_dict() for g in gammas],
        "linear_fraction": float(np.mean(linear_mask)),
    }
    logger.info(
        "synth_generated",
        regime=config.regime,
        length=length,
        channels=channels,
        seed=config.seed,
    )
    return table, metadata


def synth_cdt(
    length: int,
    channels: int,
    seed: int,
    regime: Regime = "switching",
    **overrides: Any,
) -> SeriesTable:
    """
    Synthetic table with planted, time-varying cross-channel coupling.

    Args:
        length: Rows T
        channels: C (>= 2)
        seed: Generator seed
        regime: "linear", "polynomial" or "switching"
        **overrides: Further SynthConfig fields (noise_std, alpha, tau, ...)

    Returns:
        SeriesTable with channels x0..x{C−1}
    """
    config = SynthConfig(length=length, channels=channels, seed=seed, regime=regime, **overrides)
    table, _ = generate(config)
    return table


def write_synthetic(config: SynthConfig, out: str | Path) -> tuple[Path, Path]:
    """Generate, write the CSV to ``out`` and the metadata beside it as ``<stem>.meta.json``."""
    table, metadata = generate(config)
    csv_path = write_csv(table, out)
    meta_path = csv_path.with_suffix(".meta.json")
    meta_path.write_text(json.dumps(metadata, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return csv_path, meta_path
