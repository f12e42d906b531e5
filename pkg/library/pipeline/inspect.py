"""
Learned state-transform diagnostics.

    lcm     L averaged over layers, one row per output channel
    mopa    M averaged over layers, one row per channel, one column per order
    gates   mean g_L and g_M per layer and channel on a batch of windows
    states  mean |h| per layer, channel and order before and after MOPA
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import numpy as np

from library.errors import ConfigError
from library.model.forecaster import ForecastModel
from library.polyops import LOW_ORDERS, get_transform

InspectWhat = Literal["lcm", "mopa", "gates", "states"]


@dataclass
class InspectTable:
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([f"{v:.6g}" if isinstance(v, float) else v for v in row])
        return buffer.getvalue()

    def write(self, path: str | Path) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(self.to_csv(), encoding="utf-8")
        return target


def _order_labels(model: ForecastModel, width: int) -> list[str]:
    first = 0 if width == model.config.state_size else LOW_ORDERS
    return [f"order_{first + k}" for k in range(width)]


def inspect_lcm(model: ForecastModel, channel_names: list[str]) -> InspectTable:
    mats = [b.poly.l_mat.data for b in model.blocks if b.poly.l_mat is not None]
    if not mats:
        raise ConfigError(f"variant {model.config.variant!r} has no channel-mixing matrix")
    mean = np.mean(mats, axis=0)
    table = InspectTable(columns=["channel", *channel_names])
    for name, row in zip(channel_names, mean):
        table.rows.append([name, *(float(v) for v in row)])
    return table


def inspect_mopa(model: ForecastModel, channel_names: list[str]) -> InspectTable:
    mats = [b.poly.m_mat.data for b in model.blocks if b.poly.m_mat is not None]
    if not mats:
        raise ConfigError(f"variant {model.config.variant!r} has no MOPA weights")
    mean = np.mean(mats, axis=0)
    table = InspectTable(columns=["channel", *_order_labels(model, mean.shape[1])])
    for name, row in zip(channel_names, mean):
        table.rows.append([name, *(float(v) for v in row)])
    return table


def _trace(model: ForecastModel, windows: np.ndarray) -> list[dict[str, Any]]:
    trace: list[dict[str, Any]] = []
    model.forward(windows.astype(model.dtype), mode="parallel", trace=trace)
    return trace


def inspect_gates(
    model: ForecastModel, channel_names: list[str], windows: np.ndarray
) -> InspectTable:
    if not get_transform(model.config.variant).uses_gate:
        raise ConfigError(f"variant {model.config.variant!r} has no gate")
    table = InspectTable(columns=["layer", "channel", "g_lcm", "g_mopa"])
    for layer, entry in enumerate(_trace(model, windows)):
        g_l = entry["gate_l"]
        channel_axis = g_l.ndim - 2
        axes = tuple(i for i in range(g_l.ndim) if i != channel_axis)
        means = g_l.mean(axis=axes)
        for name, g in zip(channel_names, means):
            table.rows.append([layer, name, float(g), float(1.0 - g)])
    return table


def inspect_states(
    model: ForecastModel, channel_names: list[str], windows: np.ndarray
) -> InspectTable:
    if not get_transform(model.config.variant).uses_mopa:
        raise ConfigError(f"variant {model.config.variant!r} has no MOPA stage")
    table = InspectTable(columns=["layer", "channel", "order", "pre_mopa", "post_mopa"])
    for layer, entry in enumerate(_trace(model, windows)):
        pre, post = np.abs(entry["pre_mopa"]), np.abs(entry["post_mopa"])
        lead = tuple(range(pre.ndim - 2))
        pre_mean, post_mean = pre.mean(axis=lead), post.mean(axis=lead)
        labels = _order_labels(model, pre.shape[-1])
        for c, name in enumerate(channel_names):
            for k, label in enumerate(labels):
                table.rows.append(
                    [layer, name, label, float(pre_mean[c, k]), float(post_mean[c, k])]
                )
    return table


def inspect_model(
    model: ForecastModel,
    what: InspectWhat,
    channel_names: list[str] | None = None,
    windows: np.ndarray | None = None,
) -> InspectTable:
    """
    Build one diagnostics table.

    Args:
        model: Trained model
        what: Table kind
        channel_names: Row labels (default x0..x{C-1})
        windows: [batch, C, lookback] inputs, required for gates and states
    """
    names = channel_names or [f"x{c}" for c in range(model.config.channels)]
    if what == "lcm":
        return inspect_lcm(model, names)
    if what == "mopa":
        return inspect_mopa(model, names)
    if windows is None:
        raise ConfigError(f"inspect {what} needs input windows")
    if what == "gates":
        return inspect_gates(model, names, windows)
    if what == "states":
        return inspect_states(model, names, windows)
    raise ConfigError(f"unknown inspect target {what!r}; choose lcm, mopa, gates or states")
