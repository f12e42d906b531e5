"""
Training loop.

Each epoch shuffles the training windows with ``seed + epoch``, takes Adam
steps on the MSE of normalized targets, then scores the validation split.
The best validation model is kept (and checkpointed when a path is given);
training stops after ``patience`` epochs without improvement.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any

import numpy as np
import structlog
import yaml

from library.datasets.windows import ForecastTask
from library.errors import NumericError
from library.model.checkpoint import save_checkpoint
from library.model.forecaster import ForecastModel
from library.numerics import Graph, Tensor, backward, ops
from library.pipeline.config import RunConfig, TrainConfig
from library.pipeline.metrics import MetricsRecord, MetricsWriter, evaluate
from library.pipeline.optim import Adam
from library.pipeline.tasks import prepare_task
from library.system.config import SystemConfig

logger = structlog.get_logger(__name__)


@dataclass
class TrainResult:
    """Outcome of ``train``; ``model`` holds the best validation weights."""

    model: ForecastModel
    history: list[MetricsRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_val_mse: float = float("inf")
    stopped_early: bool = False
    steps: int = 0
    checkpoint: Path | None = None
    test: MetricsRecord | None = None


def parameter_norms(model: ForecastModel) -> dict[str, float]:
    return {p.name: float(np.linalg.norm(p.data)) for p in model.parameters()}


def _norm_report(model: ForecastModel, limit: int = 5) -> str:
    norms = parameter_norms(model)
    bad = {k: v for k, v in norms.items() if not np.isfinite(v)}
    largest = sorted(
        ((k, v) for k, v in norms.items() if np.isfinite(v)), key=lambda kv: -kv[1]
    )[:limit]
    parts = [f"{k}={v}" for k, v in bad.items()] + [f"{k}={v:.4g}" for k, v in largest]
    return ", ".join(parts)


def mse_loss(prediction: Tensor, target: Tensor) -> Tensor:
    diff = prediction - target
    return ops.mean(diff * diff)


def train_step(
    model: ForecastModel,
    optimizer: Adam,
    x: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    rng: np.random.Generator,
    step: int,
) -> float:
    """
    One optimizer step on a batch; returns the batch loss.

    Raises:
        NumericError: Non-finite loss, gradient or updated parameter (message
            names the step and the parameter norms)
    """
    optimizer.zero_grad()
    try:
        with Graph() as graph:
            prediction = model.forward(
                Tensor(x, dtype=model.dtype),
                mode=cfg.scan_mode,
                training=True,
                rng=rng,
                workers=cfg.workers,
                chunk=cfg.chunk,
            )
            loss = mse_loss(prediction, Tensor(y, dtype=model.dtype))
        backward(graph, loss)
    except NumericError as exc:
        raise NumericError(
            f"non-finite value at step {step}: {exc}; parameter norms: {_norm_report(model)}"
        ) from exc
    value = loss.item()
    if not np.isfinite(value):
        raise NumericError(
            f"loss is {value} at step {step}; parameter norms: {_norm_report(model)}"
        )
    optimizer.step()
    if not all(np.all(np.isfinite(p.data)) for p in model.parameters()):
        raise NumericError(
            f"parameters became non-finite at step {step}; "
            f"parameter norms: {_norm_report(model)}"
        )
    return value


def train(
    model: ForecastModel,
    task: ForecastTask,
    cfg: TrainConfig,
    *,
    checkpoint_path: str | Path | None = None,
    writer: MetricsWriter | None = None,
    record_timing: bool = False,
    metadata: dict[str, Any] | None = None,
) -> TrainResult:
    """
    Fit ``model`` on the task's training windows.

    Args:
        model: Freshly initialized (or resumed) model; updated in place
        task: Windowed dataset
        cfg: Optimization settings
        checkpoint_path: Where the best validation model is written
        writer: Receives one record per epoch (validation scores plus train loss)
        record_timing: Fill ``wall_ms`` on the epoch records
        metadata: Extra checkpoint metadata

    Returns:
        TrainResult with the best weights loaded back into ``model``
    """
    optimizer = Adam(model.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)
    train_windows = task.split("train")
    result = TrainResult(model=model)
    best_state = model.state_dict()
    stale = 0
    step = 0

    for epoch in range(1, cfg.epochs + 1):
        started = time.perf_counter()
        dropout_rng = np.random.default_rng([cfg.seed, epoch])
        losses: list[float] = []
        batches = train_windows.batches(cfg.batch_size, shuffle=True, seed=cfg.seed + epoch)
        for index, (x, y) in enumerate(batches):
            if cfg.max_batches_per_epoch is not None and index >= cfg.max_batches_per_epoch:
                break
            step += 1
            losses.append(train_step(model, optimizer, x, y, cfg, dropout_rng, step))

        record = evaluate(
            model,
            task,
            "val",
            batch_size=cfg.eval_batch_size,
            mode=cfg.scan_mode,
            workers=cfg.workers,
            chunk=cfg.chunk,
            epoch=epoch,
        )
        record.train_loss = float(np.mean(losses)) if losses else None
        record.seed = cfg.seed
        if record_timing:
            record.wall_ms = round((time.perf_counter() - started) * 1000.0, 3)
        result.history.append(record)
        if writer is not None:
            writer.write(record)

        improved = record.mse < result.best_val_mse
        logger.info(
            "epoch_complete",
            epoch=epoch,
            train_loss=record.train_loss,
            val_mse=round(record.mse, 6),
            val_mae=round(record.mae, 6),
            improved=improved,
        )
        if improved:
            result.best_epoch = epoch
            result.best_val_mse = record.mse
            best_state = model.state_dict()
            stale = 0
            if checkpoint_path is not None:
                result.checkpoint = save_checkpoint(
                    checkpoint_path,
                    model,
                    {
                        **(metadata or {}),
                        "normalization": task.spec.as_metadata(),
                        "normalized": task.normalized,
                        "channel_names": list(task.channel_names),
                        "epoch": epoch,
                        "val_mse": record.mse,
                        "seed": cfg.seed,
                    },
                )
        else:
            stale += 1
            if stale >= cfg.patience:
                result.stopped_early = epoch < cfg.epochs
                logger.info("early_stop", epoch=epoch, best_epoch=result.best_epoch)
                break

    model.load_state_dict(best_state)
    result.steps = step
    return result


def run_directory(run: RunConfig, system: SystemConfig) -> Path:
    """output.dir, or {experiments_root}/{experiment_id}/runs/{timestamp} made unique."""
    if run.output.dir is not None:
        return Path(run.output.dir)
    base = Path(system.output.experiments_root) / run.experiment_id / "runs"
    stamp = datetime.now().strftime(system.output.run_id_format)
    candidate = base / stamp
    suffix = 1
    while candidate.exists():
        suffix += 1
        candidate = base / f"{stamp}_{suffix}"
    return candidate


def run_training(
    run: RunConfig,
    system: SystemConfig | None = None,
    task: ForecastTask | None = None,
) -> TrainResult:
    """
    Train the configured model end to end and score the test split.

    Writes the resolved run config, the per-epoch metrics JSONL (plus a final
    test record) and the best checkpoint into the run directory.
    """
    system = system or SystemConfig()
    task = task or prepare_task(run.data, system.sources_config)
    model_config = run.model_for(task.table.n_channels)
    model = ForecastModel.init(model_config, seed=run.train.seed, dtype=run.train.precision)

    out_dir = run_directory(run, system)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "run_config.yaml", "w", encoding="utf-8") as f:
        yaml.safe_dump(run.model_dump(mode="json"), f, sort_keys=True)
    writer = MetricsWriter(out_dir / run.output.metrics_name)

    logger.info(
        "training_started",
        experiment=run.experiment_id,
        variant=model_config.variant,
        parameters=model.parameter_count(),
        out_dir=str(out_dir),
    )
    result = train(
        model,
        task,
        run.train,
        checkpoint_path=out_dir / run.output.checkpoint_name,
        writer=writer,
        record_timing=run.output.record_timing,
        metadata={
            "experiment_id": run.experiment_id,
            "data": run.data.source_label,
            "data_config": run.data.model_dump(mode="json"),
            "train_config": run.train.model_dump(mode="json"),
        },
    )
    test = evaluate(
        model,
        task,
        "test",
        batch_size=run.train.eval_batch_size,
        mode=run.train.scan_mode,
        workers=run.train.workers,
        chunk=run.train.chunk,
        epoch=result.best_epoch,
        record_timing=run.output.record_timing,
    )
    test.seed = run.train.seed
    writer.write(test)
    result.test = test
    logger.info(
        "training_complete",
        best_epoch=result.best_epoch,
        best_val_mse=round(result.best_val_mse, 6),
        test_mse=round(test.mse, 6),
        test_mae=round(test.mae, 6),
    )
    return result
