"""Training, evaluation, ablation and diagnostics around the forecaster."""

from library.pipeline.ablation import (
    AblationRow,
    AblationSummary,
    AblationVariant,
    ablate,
    summarize,
    write_rows,
    write_summary,
)
from library.pipeline.config import (
    DataConfig,
    OutputConfig,
    RunConfig,
    TrainConfig,
    apply_overrides,
    load_run_config,
    parse_override,
)
from library.pipeline.demos import BasisCheck, HippoDemoResult, basis_check, hippo_demo
from library.pipeline.forecast import forecast_table
from library.pipeline.inspect import InspectTable, inspect_model
from library.pipeline.metrics import (
    MetricsRecord,
    MetricsWriter,
    evaluate,
    mse_mae,
    predict_split,
    read_metrics,
)
from library.pipeline.optim import Adam
from library.pipeline.tasks import load_table, prepare_task
from library.pipeline.trainer import TrainResult, run_training, train, train_step

__all__ = [
    "AblationRow",
    "AblationSummary",
    "AblationVariant",
    "Adam",
    "BasisCheck",
    "DataConfig",
    "HippoDemoResult",
    "InspectTable",
    "MetricsRecord",
    "MetricsWriter",
    "OutputConfig",
    "RunConfig",
    "TrainConfig",
    "TrainResult",
    "ablate",
    "apply_overrides",
    "basis_check",
    "evaluate",
    "forecast_table",
    "hippo_demo",
    "inspect_model",
    "load_run_config",
    "load_table",
    "mse_mae",
    "parse_override",
    "predict_split",
    "prepare_task",
    "read_metrics",
    "run_training",
    "summarize",
    "train",
    "train_step",
    "write_rows",
    "write_summary",
]
