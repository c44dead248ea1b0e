from pathlib import Path
from typing import Annotated

import typer

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
    validate_variant,
)

from .common import build_runner, effective_settings, print_summary


@app.command(
    "run",
    help="Run the alignment pipeline over every problem of a dataset",
    rich_help_panel=RichHelpPanel.PIPELINE.value,
)
def run(
    ctx: typer.Context,
    dataset: Annotated[
        Path,
        typer.Argument(help="Line-delimited dataset file", exists=True, dir_okay=False),
    ],
    out: Annotated[
        Path, typer.Option(help="Run directory")
    ] = DEFAULT_OUTPUT_DIR / "latest",
    iterations: Annotated[
        int | None, typer.Option(help="Maximum alignment iterations", min=1)
    ] = None,
    variant: Annotated[
        Variant | None,
        typer.Option(
            help="Pipeline variant: full, woPTC, woT, wTF, woA or woAR",
            parser=validate_variant,
        ),
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
    cache_file: Annotated[
        Path | None,
        typer.Option(help="Replay cache file (defaults to <out>/cache/replay.log)"),
    ] = None,
    parallelism: Annotated[
        int | None, typer.Option(help="Problems run concurrently", min=1)
    ] = None,
    sandbox_workers: Annotated[
        int | None, typer.Option(help="Programs executed concurrently", min=1)
    ] = None,
    trace_private: Annotated[
        bool | None,
        typer.Option(
            "--trace-private/--no-trace-private",
            help="Record private pass ratios of every iteration in the traces",
        ),
    ] = None,
) -> None:
    settings = effective_settings(
        ctx,
        iterations=iterations,
        variant=variant,
        tester_k=tester_k,
        wall_timeout=timeout,
        seed=seed,
        parallelism=parallelism,
        sandbox_workers=sandbox_workers,
        trace_private=trace_private,
    )
    runner = build_runner(ctx, settings, backend, scenario, cache, cache_file)

    try:
        outcome = runner.run(dataset, out)
    except (
        DatasetParseError,
        DuplicateProblemError,
        ProblemValidationError,
        ReplayCacheCorruptError,
        ValueError,
    ) as ex:
        ctx.obj.logger.exception("run failed")
        print_error(f"Run failed: {ex}")
        raise typer.Exit(code=1) from ex

    print_summary(outcome.summary, out)
