"""
Ablation grid over state-transform variants.

Every (horizon, variant, seed) cell trains a fresh model on the same data
with the same seed, so the variants differ only in the state transform:

    full       LCM + MOPA, gated high orders, LCM low orders
    gate_only  gate applied to all orders, no low-order splice
    no_lcm     MOPA on high orders, identity in place of L
    no_mopa    LCM only
    vanilla    identity state transform (plain selective SSM on patch tokens)
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np
import structlog

from library.datasets.windows import ForecastTask
from library.model.forecaster import ForecastModel
from library.pipeline.config import RunConfig
from library.pipeline.metrics import evaluate
from library.pipeline.tasks import prepare_task
from library.pipeline.trainer import train
from library.polyops import VARIANTS
from library.system.config import SystemConfig

logger = structlog.get_logger(__name__)

AblationVariant = Literal["full", "gate_only", "no_lcm", "no_mopa", "vanilla"]

ROW_FIELDS = ("variant", "horizon", "seed", "mse", "mae")
SUMMARY_FIELDS = ("variant", "horizon", "seeds", "mse_mean", "mse_std", "mae_mean", "mae_std")


@dataclass(frozen=True)
class AblationRow:
    variant: str
    horizon: int
    seed: int
    mse: float
    mae: float


@dataclass(frozen=True)
class AblationSummary:
    variant: str
    horizon: int
    seeds: int
    mse_mean: float
    mse_std: float
    mae_mean: float
    mae_std: float


def run_cell(run: RunConfig, task: ForecastTask, variant: str, seed: int) -> AblationRow:
    """Train one variant with one seed and score its test split."""
    cell = run.model_copy(deep=True)
    cell.train.seed = seed
    cell.model.variant = variant
    model = ForecastModel.init(
        cell.model_for(task.table.n_channels), seed=seed, dtype=cell.train.precision
    )
    train(model, task, cell.train)
    record = evaluate(
        model,
        task,
        "test",
        batch_size=cell.train.eval_batch_size,
        mode=cell.train.scan_mode,
        workers=cell.train.workers,
        chunk=cell.train.chunk,
    )
    logger.info(
        "ablation_cell",
        variant=variant,
        horizon=task.spec.horizon,
        seed=seed,
        mse=round(record.mse, 6),
        mae=round(record.mae, 6),
    )
    return AblationRow(variant, task.spec.horizon, seed, record.mse, record.mae)


def ablate(
    run: RunConfig,
    seeds: Sequence[int],
    horizons: Sequence[int] | None = None,
    variants: Iterable[str] = VARIANTS,
    system: SystemConfig | None = None,
) -> list[AblationRow]:
    """
    Run the grid.

    Args:
        run: Base configuration shared by every cell
        seeds: Model seeds (each variant sees every seed)
        horizons: Forecast lengths (default: the run's data.horizon)
        variants: Variant names, all five by default
        system: Supplies the dataset registry path

    Returns:
        Rows ordered by horizon, variant, seed
    """
    system = system or SystemConfig()
    variants = list(variants)
    unknown = [v for v in variants if v not in VARIANTS]
    if unknown:
        raise ValueError(f"unknown variants {unknown}; choose from {', '.join(VARIANTS)}")
    rows: list[AblationRow] = []
    for horizon in horizons or [run.data.horizon]:
        data = run.data.model_copy(update={"horizon": horizon})
        task = prepare_task(data, system.sources_config)
        horizon_run = run.model_copy(update={"data": data})
        for variant in variants:
            for seed in seeds:
                rows.append(run_cell(horizon_run, task, variant, seed))
    return rows


def summarize(rows: Iterable[AblationRow]) -> list[AblationSummary]:
    """Seed-averaged scores per (variant, horizon), in first-seen order."""
    groups: dict[tuple[str, int], list[AblationRow]] = defaultdict(list)
    for row in rows:
        groups[(row.variant, row.horizon)].append(row)
    summary = []
    for (variant, horizon), group in groups.items():
        mse = np.array([r.mse for r in group])
        mae = np.array([r.mae for r in group])
        summary.append(
            AblationSummary(
                variant=variant,
                horizon=horizon,
                seeds=len(group),
                mse_mean=float(mse.mean()),
                mse_std=float(mse.std()),
                mae_mean=float(mae.mean()),
                mae_std=float(mae.std()),
            )
        )
    return summary


def write_rows(rows: Iterable[AblationRow], path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(ROW_FIELDS)
        for r in rows:
            writer.writerow([r.variant, r.horizon, r.seed, repr(r.mse), repr(r.mae)])
    return target


def write_summary(summary: Iterable[AblationSummary], path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(SUMMARY_FIELDS)
        for s in summary:
            writer.writerow(
                [
                    s.variant,
                    s.horizon,
                    s.seeds,
                    f"{s.mse_mean:.6f}",
                    f"{s.mse_std:.6f}",
                    f"{s.mae_mean:.6f}",
                    f"{s.mae_std:.6f}",
                ]
            )
    return target
