from pathlib import Path

import typer
from rich import print
from rich.markup import escape
from rich.table import Table

from specine.cli import settings_or_exit
from specine.services import BackendKind, BenchmarkRunner, CacheMode
from specine.utils import (
    EvalSummary,
    Ratio,
    Settings,
    SettingsError,
    apply_overrides,
    format_ratio,
    print_error,
)


def effective_settings(ctx: typer.Context, **overrides: object) -> Settings:
    """Apply command-line overrides on top of the loaded settings or exit 1."""
    try:
        return apply_overrides(settings_or_exit(ctx), **overrides)
    except SettingsError as ex:
        print_error(f"Invalid option: {ex}")
        raise typer.Exit(code=1) from ex


def build_runner(
    ctx: typer.Context,
    settings: Settings,
    backend: BackendKind,
    scenario: Path | None,
    cache: CacheMode,
    cache_file: Path | None,
) -> BenchmarkRunner:
    replaying = cache == CacheMode.REPLAY
    if backend == BackendKind.SCRIPTED and scenario is None and not replaying:
        print_error("The scripted backend needs --scenario.")
        raise typer.Exit(code=1)
    return BenchmarkRunner(
        settings,
        backend=backend,
        scenario_path=scenario,
        cache_mode=cache,
        cache_path=cache_file,
        log_level=ctx.obj.log_level,
    )


def print_summary(summary: EvalSummary, out: Path) -> None:
    table = Table(title=f"{escape(summary.dataset)} ({summary.variant or 'full'})")
    table.add_column("metric")
    table.add_column("value", no_wrap=True)
    table.add_row("problems", str(summary.problems))
    table.add_row("Pass@1", format_ratio(Ratio(summary.solved, summary.problems)))
    table.add_row("AvgPassRatio", f"{summary.avg_pass_ratio:.2f}%")
    table.add_row("prompt tokens", str(summary.usage.prompt_tokens))
    table.add_row("completion tokens", str(summary.usage.completion_tokens))
    table.add_row("wall time", f"{summary.wall_time:.1f}s")
    print(table)
    print(f"Run written to {escape(str(out))}")
