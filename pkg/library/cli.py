"""
Command-line interface.

    polyssm train        train one configuration, keep the best checkpoint
    polyssm eval         score a checkpoint on a split
    polyssm ablate       variant × seed × horizon grid
    polyssm forecast     predict the horizon after a CSV's last window
    polyssm synth        write a synthetic CDT dataset (+ .meta.json)
    polyssm hippo-demo   LegS online approximation of a test signal
    polyssm basis-check  Legendre Gram matrix and counting checks
    polyssm scan-bench   sequential vs parallel scan timings
    polyssm inspect      learned L, M, gates and state magnitudes

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numeric failure.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Callable, Sequence

import click
import numpy as np
import structlog
from pydantic import ValidationError

from library.adapters.ett_csv import dumps_csv, load_csv, write_csv
from library.datasets.synth import SynthConfig, write_synthetic
from library.errors import (
    CheckpointError,
    ConfigError,
    DataError,
    NumericError,
    PolySSMError,
)
from library.model.checkpoint import Checkpoint, load_checkpoint
from library.pipeline import report
from library.pipeline.ablation import ablate, summarize, write_rows, write_summary
from library.pipeline.config import DataConfig, load_run_config, parse_override
from library.pipeline.demos import basis_check, hippo_demo
from library.pipeline.forecast import forecast_table
from library.pipeline.inspect import inspect_model
from library.pipeline.metrics import MetricsWriter, evaluate
from library.pipeline.tasks import prepare_task
from library.pipeline.trainer import run_training
from library.polyops import VARIANTS
from library.sscan.bench import scan_benchmark
from library.system import SystemConfig, configure_logging, load_system_config

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"expected comma-separated integers, got {text!r}") from exc


def _overrides(
    sets: Sequence[str], seed: int | None = None, threads: int | None = None
) -> dict[str, Any]:
    overrides = dict(parse_override(item) for item in sets)
    if seed is not None:
        overrides["train.seed"] = seed
    if threads is not None:
        overrides["train.workers"] = threads
    return overrides


def _data_source(csv: str | None, dataset: str | None) -> dict[str, Any]:
    if csv is not None and dataset is not None:
        raise click.UsageError("pass at most one of --csv and --dataset")
    if csv is not None:
        return {"data.csv": csv, "data.synth": None, "data.dataset": None}
    if dataset is not None:
        return {"data.dataset": dataset, "data.synth": None, "data.csv": None}
    return {}


def run_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """--config, --seed, --threads, --set, --csv and --dataset for run-based commands."""
    options = [
        click.option("--config", "config_path", type=click.Path(), help="Run config YAML."),
        click.option("--seed", type=int, default=None, help="Overrides train.seed."),
        click.option("--threads", type=click.IntRange(min=1), default=None, help="Scan threads."),
        click.option(
            "--set", "sets", multiple=True, metavar="KEY=VALUE", help="Dotted config override."
        ),
        click.option("--csv", default=None, help="ETT-layout CSV to use as data."),
        click.option("--dataset", default=None, help="Dataset name from the registry."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@click.group()
@click.option("--system-config", type=click.Path(), default=None, help="System config YAML.")
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=None,
)
@click.pass_context
def cli(ctx: click.Context, system_config: str | None, log_level: str | None) -> None:
    """Poly-Mamba style selective SSM forecaster."""
    system = load_system_config(system_config)
    if log_level is not None:
        system.logging.level = log_level.upper()
    configure_logging(system.logging)
    ctx.obj = system


@cli.command()
@run_options
@click.option("--out", default=None, help="Run directory (overrides output.dir).")
@click.pass_obj
def train(
    system: SystemConfig,
    config_path: str | None,
    seed: int | None,
    threads: int | None,
    sets: tuple[str, ...],
    csv: str | None,
    dataset: str | None,
    out: str | None,
) -> None:
    """Train a model and write metrics JSONL plus the best checkpoint."""
    overrides = {**_overrides(sets, seed, threads), **_data_source(csv, dataset)}
    if out is not None:
        overrides["output.dir"] = out
    run = load_run_config(config_path, overrides)
    result = run_training(run, system)
    if result.test is not None:
        report.show(report.metrics_table([result.history[-1], result.test], "Training result"))
    if result.checkpoint is not None:
        click.echo(str(result.checkpoint.parent))


def _eval_data(
    checkpoint: Checkpoint,
    config_path: str | None,
    csv: str | None,
    dataset: str | None,
    overrides: dict[str, Any],
) -> DataConfig:
    source = _data_source(csv, dataset)
    if config_path is not None or source:
        data = load_run_config(config_path, {**overrides, **source}).data
    elif "data_config" in checkpoint.metadata:
        data = DataConfig.model_validate(checkpoint.metadata["data_config"])
    else:
        raise ConfigError("checkpoint does not record its data; pass --config, --csv or --dataset")
    cfg = checkpoint.model.config
    return data.model_copy(
        update={
            "lookback": cfg.lookback,
            "horizon": cfg.horizon,
            "instance_norm": cfg.instance_norm,
        }
    )


@cli.command("eval")
@click.option("--ckpt", required=True, type=click.Path(), help="Checkpoint (.pssm).")
@run_options
@click.option("--split", type=click.Choice(["train", "val", "test"]), default="test")
@click.option("--metrics-out", type=click.Path(), default=None, help="Append record to JSONL.")
@click.pass_obj
def eval_command(
    system: SystemConfig,
    ckpt: str,
    config_path: str | None,
    seed: int | None,
    threads: int | None,
    sets: tuple[str, ...],
    csv: str | None,
    dataset: str | None,
    split: str,
    metrics_out: str | None,
) -> None:
    """Score a checkpoint (MSE/MAE on the normalized scale)."""
    checkpoint = load_checkpoint(ckpt)
    data = _eval_data(checkpoint, config_path, csv, dataset, _overrides(sets, seed, threads))
    task = prepare_task(data, system.sources_config)
    record = evaluate(checkpoint.model, task, split, workers=threads or system.runtime.threads)
    if metrics_out is not None:
        MetricsWriter(metrics_out, truncate=False).write(record)
    report.show(report.metrics_table([record]))
    click.echo(record.to_json())


@cli.command("ablate")
@run_options
@click.option("--seeds", default="0,1,2", show_default=True, help="Comma-separated seeds.")
@click.option("--horizons", default=None, help="Comma-separated horizons (default data.horizon).")
@click.option("--variants", default=",".join(VARIANTS), show_default=True)
@click.option("--out", default="ablation", show_default=True, help="Output directory.")
@click.pass_obj
def ablate_command(
    system: SystemConfig,
    config_path: str | None,
    seed: int | None,
    threads: int | None,
    sets: tuple[str, ...],
    csv: str | None,
    dataset: str | None,
    seeds: str,
    horizons: str | None,
    variants: str,
    out: str,
) -> None:
    """Train every variant on every seed and write the ablation CSVs."""
    run = load_run_config(
        config_path, {**_overrides(sets, None, threads), **_data_source(csv, dataset)}
    )
    seed_list = [seed] if seed is not None else _int_list(seeds)
    variant_list = [v.strip() for v in variants.split(",") if v.strip()]
    unknown = [v for v in variant_list if v not in VARIANTS]
    if unknown:
        raise click.BadParameter(f"unknown variants {unknown}; choose from {', '.join(VARIANTS)}")
    rows = ablate(
        run,
        seed_list,
        _int_list(horizons) if horizons else None,
        variant_list,
        system,
    )
    summary = summarize(rows)
    out_dir = Path(out)
    write_rows(rows, out_dir / "ablation.csv")
    write_summary(summary, out_dir / "ablation_summary.csv")
    report.show(report.ablation_table(summary))
    click.echo(str(out_dir))


@cli.command("forecast")
@click.option("--ckpt", required=True, type=click.Path(), help="Checkpoint (.pssm).")
@click.option("--data", "data_path", required=True, type=click.Path(), help="Input CSV.")
@click.option("--out", default=None, type=click.Path(), help="Output CSV (default stdout).")
def forecast_command(ckpt: str, data_path: str, out: str | None) -> None:
    """Forecast the horizon after the CSV's last lookback window."""
    checkpoint = load_checkpoint(ckpt)
    prediction = forecast_table(checkpoint, load_csv(data_path))
    if out is not None:
        write_csv(prediction, out)
        click.echo(out)
        return
    click.echo(dumps_csv(prediction), nl=False)


@cli.command("synth")
@click.option(
    "--regime",
    type=click.Choice(["linear", "polynomial", "switching"]),
    default="switching",
    show_default=True,
)
@click.option("--c", "channels", type=int, default=8, show_default=True, help="Channels C.")
@click.option("--t", "length", type=click.IntRange(min=1), default=20000, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=7, show_default=True)
@click.option("--noise-std", type=click.FloatRange(min=0.0), default=None)
@click.option("--switch-period", type=click.IntRange(min=1), default=None)
@click.option("--out", required=True, type=click.Path(), help="Output CSV.")
def synth_command(
    regime: str,
    channels: int,
    length: int,
    seed: int,
    noise_std: float | None,
    switch_period: int | None,
    out: str,
) -> None:
    """Write a synthetic CDT dataset and its generator metadata."""
    if channels < 2:
        raise DataError(f"synthetic CDT needs at least 2 channels, got --c {channels}")
    extras: dict[str, Any] = {}
    if noise_std is not None:
        extras["noise_std"] = noise_std
    if switch_period is not None:
        extras["switch_period"] = switch_period
    config = SynthConfig(length=length, channels=channels, seed=seed, regime=regime, **extras)
    csv_path, meta_path = write_synthetic(config, out)
    click.echo(f"{csv_path}\n{meta_path}")


@cli.command("hippo-demo")
@click.option("--signal", default="sin", show_default=True, help="sin, square or csv:<path>.")
@click.option("--n", type=click.IntRange(min=1), default=32, show_default=True)
@click.option("--t-start", type=float, default=1.0, show_default=True)
@click.option("--t-end", type=float, default=10.0, show_default=True)
@click.option("--dt", type=float, default=0.005, show_default=True)
@click.option(
    "--initial",
    type=click.Choice(["zero", "hold", "linear"]),
    default="linear",
    show_default=True,
    help="History assumed before the first sample.",
)
@click.option("--out", default=None, type=click.Path(), help="Output CSV (default stdout).")
def hippo_demo_command(
    signal: str,
    n: int,
    t_start: float,
    t_end: float,
    dt: float,
    initial: str,
    out: str | None,
) -> None:
    """Reconstruct a signal from its final LegS coefficients (CSV: t,u,u_hat,abs_err)."""
    result = hippo_demo(signal, n, t_start, t_end, dt, initial)  # type: ignore[arg-type]
    _emit(result.to_csv(), out)


@cli.command("basis-check")
@click.option("--channels", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--max-deg", type=click.IntRange(min=0), default=3, show_default=True)
def basis_check_command(channels: int, max_deg: int) -> None:
    """Orthogonality of the multivariate Legendre basis and counting formulas."""
    check = basis_check(channels, max_deg)
    report.show(report.basis_table(check))
    if not check.ok:
        raise NumericError(
            f"basis check failed: off-diagonal {check.max_off_diagonal:.3e}, "
            f"diagonal error {check.max_diagonal_error:.3e}, counts match {check.counts_match}"
        )


@cli.command("scan-bench")
@click.option("--lengths", "--l", "lengths", default="64,256,1024,4096", show_default=True)
@click.option(
    "--impls", "--impl", "impls", default="both", show_default=True, help="seq, par or both."
)
@click.option("--dtype", type=click.Choice(["float32", "float64"]), default="float64")
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--repeats", type=click.IntRange(min=1), default=3, show_default=True)
@click.option("--out", default=None, type=click.Path(), help="Output CSV (default stdout).")
def scan_bench_command(
    lengths: str,
    impls: str,
    dtype: str,
    seed: int,
    threads: int,
    repeats: int,
    out: str | None,
) -> None:
    """Time the sequential and parallel scans (CSV: L,impl,wall_ms,max_abs_diff_vs_seq)."""
    impl_list = [i.strip() for i in impls.split(",") if i.strip()]
    if impl_list == ["both"]:
        impl_list = ["seq", "par"]
    bad = [i for i in impl_list if i not in ("seq", "par")]
    if bad:
        raise click.BadParameter(f"unknown scan implementations {bad}; use seq and/or par")
    rows = scan_benchmark(
        _int_list(lengths),
        impl_list,  # type: ignore[arg-type]
        dtype=dtype,
        seed=seed,
        workers=threads,
        repeats=repeats,
    )
    report.show(report.bench_table(rows))
    lines = ["L,impl,wall_ms,max_abs_diff_vs_seq"]
    for row in rows:
        values = row.as_row()
        lines.append(",".join(str(values[k]) for k in values))
    _emit("\n".join(lines) + "\n", out)


@cli.command("inspect")
@click.option("--ckpt", required=True, type=click.Path(), help="Checkpoint (.pssm).")
@click.option(
    "--what", type=click.Choice(["lcm", "mopa", "gates", "states"]), default="lcm"
)
@click.option("--data", "data_path", default=None, type=click.Path(), help="CSV for windows.")
@click.option("--windows", type=click.IntRange(min=1), default=32, show_default=True)
@click.option("--out", default=None, type=click.Path(), help="Output CSV (default stdout).")
@click.pass_obj
def inspect_command(
    system: SystemConfig,
    ckpt: str,
    what: str,
    data_path: str | None,
    windows: int,
    out: str | None,
) -> None:
    """Dump learned state-transform diagnostics as CSV."""
    checkpoint = load_checkpoint(ckpt)
    names = checkpoint.metadata.get("channel_names")
    batch = None
    if what in ("gates", "states"):
        data = _eval_data(checkpoint, None, data_path, None, {})
        task = prepare_task(data, system.sources_config)
        test = task.split("test")
        count = min(windows, len(test))
        batch, _ = test.stack(np.arange(count))
    table = inspect_model(checkpoint.model, what, names, batch)  # type: ignore[arg-type]
    _emit(table.to_csv(), out)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        click.echo(text, nl=False)
        return
    target = Path(out)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")
    click.echo(str(target))


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, NumericError):
        return EXIT_NUMERIC
    if isinstance(exc, (DataError, CheckpointError, FileNotFoundError)):
        return EXIT_DATA
    return EXIT_USAGE


def main(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and return its exit code."""
    try:
        result = cli.main(
            args=list(argv) if argv is not None else None,
            prog_name="polyssm",
            standalone_mode=False,
        )
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.Abort:
        click.echo("Aborted.", err=True)
        return EXIT_USAGE
    except ValidationError as exc:
        click.echo(f"Error: invalid settings\n{exc}", err=True)
        return EXIT_USAGE
    except (PolySSMError, FileNotFoundError) as exc:
        code = _exit_code(exc)
        logger.error("command_failed", error=type(exc).__name__, message=str(exc), exit_code=code)
        click.echo(f"Error: {exc}", err=True)
        return code
    return result if isinstance(result, int) else EXIT_OK
