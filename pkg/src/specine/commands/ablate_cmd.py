from pathlib import Path
from typing import Annotated

import typer
from rich import print
from rich.table import Table

from specine.cli import app
from specine.services import BackendKind, CacheMode
from specine.utils import (
    DEFAULT_OUTPUT_DIR,
    DatasetParseError,
    DuplicateProblemError,
    ProblemValidationError,
    ReplayCacheCorruptError,
    RichHelpPanel,
    Variant,
    print_error,
    validate_variant_list,
)

from .common import build_runner, effective_settings

ALL_VARIANTS = ",".join(v.value for v in Variant)


@app.command(
    "ablate",
    help="Run the pipeline once per variant and compare the variants",
    rich_help_panel=RichHelpPanel.PIPELINE.value,
)
def ablate(
    ctx: typer.Context,
    dataset: Annotated[
        Path,
        typer.Argument(help="Line-delimited dataset file", exists=True, dir_okay=False),
    ],
    variants: Annotated[
        str, typer.Option(help="Comma-separated variants to compare")
    ] = ALL_VARIANTS,
    out: Annotated[
        Path, typer.Option(help="Parent directory of the per-variant runs")
    ] = DEFAULT_OUTPUT_DIR / "ablation",
    iterations: Annotated[
        int | None, typer.Option(help="Maximum alignment iterations", min=1)
    ] = None,
    tester_k: Annotated[
        int | None, typer.Option(help="Test cases requested from the tester", min=1)
    ] = None,
    timeout: Annotated[
        float | None, typer.Option(help="Per-test wall timeout in seconds", min=0.001)
    ] = None,
    seed: Annotated[int | None, typer.Option(help="Random seed")] = None,
    backend: Annotated[
        BackendKind, typer.Option(help="Model backend")
    ] = BackendKind.HTTP,
    scenario: Annotated[
        Path | None,
        typer.Option(
            help="Scenario file for the scripted backend", exists=True, dir_okay=False
        ),
    ] = None,
    cache: Annotated[
        CacheMode, typer.Option(help="Replay cache mode")
    ] = CacheMode.OFF,
    parallelism: Annotated[
        int | None, typer.Option(help="Problems run concurrently", min=1)
    ] = None,
) -> None:
    selected = validate_variant_list(variants)
    settings = effective_settings(
        ctx,
        iterations=iterations,
        tester_k=tester_k,
        wall_timeout=timeout,
        seed=seed,
        parallelism=parallelism,
    )
    runner = build_runner(ctx, settings, backend, scenario, cache, None)

    try:
        _, rows = runner.ablate(dataset, out, selected)
    except (
        DatasetParseError,
        DuplicateProblemError,
        ProblemValidationError,
        ReplayCacheCorruptError,
        ValueError,
    ) as ex:
        ctx.obj.logger.exception("ablation failed")
        print_error(f"Ablation failed: {ex}")
        raise typer.Exit(code=1) from ex

    table = Table(title="Ablation")
    table.add_column("variant", no_wrap=True)
    table.add_column("Pass@1", no_wrap=True)
    table.add_column("AvgPassRatio", no_wrap=True)
    table.add_column("tokens", no_wrap=True)
    table.add_column("time", no_wrap=True)
    for row in rows:
        table.add_row(
            row.variant,
            f"{row.pass_at_1:.2f}%",
            f"{row.avg_pass_ratio:.2f}%",
            str(row.prompt_tokens + row.completion_tokens),
            f"{row.wall_time:.1f}s",
        )
    print(table)
