"""Human-facing rich tables, printed to stderr."""

from __future__ import annotations

from typing import Iterable

from rich.console import Console
from rich.table import Table

from library.pipeline.ablation import AblationSummary
from library.pipeline.demos import BasisCheck
from library.pipeline.metrics import MetricsRecord
from library.sscan.bench import BenchRow

console = Console(stderr=True)


def metrics_table(records: Iterable[MetricsRecord], title: str = "Evaluation") -> Table:
    table = Table(title=title)
    for column in ("split", "horizon", "variant", "epoch", "MSE", "MAE"):
        table.add_column(column, justify="right" if column in ("MSE", "MAE") else "left")
    for r in records:
        table.add_row(
            r.split,
            str(r.horizon),
            r.variant or "-",
            "-" if r.epoch is None else str(r.epoch),
            f"{r.mse:.4f}",
            f"{r.mae:.4f}",
        )
    return table


def ablation_table(summary: Iterable[AblationSummary]) -> Table:
    table = Table(title="Ablation (test, mean ± std over seeds)")
    table.add_column("variant")
    table.add_column("horizon", justify="right")
    table.add_column("MSE", justify="right")
    table.add_column("MAE", justify="right")
    for s in summary:
        table.add_row(
            s.variant,
            str(s.horizon),
            f"{s.mse_mean:.4f} ± {s.mse_std:.4f}",
            f"{s.mae_mean:.4f} ± {s.mae_std:.4f}",
        )
    return table


def bench_table(rows: Iterable[BenchRow]) -> Table:
    table = Table(title="Scan benchmark")
    for column in ("L", "impl", "wall_ms", "max |Δ| vs seq"):
        table.add_column(column, justify="right")
    for r in rows:
        table.add_row(str(r.length), r.impl, f"{r.wall_ms:.3f}", f"{r.max_abs_diff_vs_seq:.2e}")
    return table


def basis_table(check: BasisCheck) -> Table:
    table = Table(title=f"Legendre basis, C={check.channels}, degree ≤ {check.max_deg}")
    table.add_column("check")
    table.add_column("value", justify="right")
    table.add_row("max |off-diagonal|", f"{check.max_off_diagonal:.2e}")
    table.add_row("max |diagonal − Π 2/(2n+1)|", f"{check.max_diagonal_error:.2e}")
    table.add_row("count_degree == enumeration", str(check.counts_match))
    table.add_row("count_total", str(check.count_total))
    table.add_row("status", "[green]ok[/green]" if check.ok else "[red]FAILED[/red]")
    return table


def show(table: Table) -> None:
    console.print(table)
