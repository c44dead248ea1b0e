from pathlib import Path
from typing import Annotated

import typer
from rich import print

from specine.cli import settings_or_exit
from specine.services import BenchService, RunStorage, SandboxService, load_dataset
from specine.utils import (
    DatasetParseError,
    DuplicateProblemError,
    MissingCanonicalError,
    ProblemValidationError,
    Ratio,
    SandboxSetupError,
    TraceDecodeError,
    format_ratio,
    print_error,
)

from . import app


@app.command("tests", help="Audit generated tests against canonical solutions.")
def tests(
    ctx: typer.Context,
    run_dir: Annotated[
        Path, typer.Argument(help="Run directory", exists=True, file_okay=False)
    ],
    dataset: Annotated[
        Path,
        typer.Option(
            help="Dataset with canonical solutions", exists=True, dir_okay=False
        ),
    ],
) -> None:
    settings = settings_or_exit(ctx)
    storage = RunStorage(run_dir, log_level=ctx.obj.log_level)
    sandbox = SandboxService(
        interpreters=settings.interpreters,
        workers=settings.sandbox_workers,
        float_tolerance=settings.float_tolerance,
        log_level=ctx.obj.log_level,
    )
    bench = BenchService(
        sandbox,
        limits=settings.limits(),
        lang=settings.lang,
        parallelism=settings.parallelism,
        log_level=ctx.obj.log_level,
    )

    try:
        records = storage.read_traces()
        if not records:
            print_error(f"No traces found in {run_dir}")
            raise typer.Exit(code=1)
        audit = bench.audit_generated_tests(
            load_dataset(dataset),
            {record.problem_id: record.result.generated_tests for record in records},
        )
    except (
        TraceDecodeError,
        DatasetParseError,
        DuplicateProblemError,
        ProblemValidationError,
        MissingCanonicalError,
        SandboxSetupError,
    ) as ex:
        print_error(str(ex))
        raise typer.Exit(code=1) from ex

    storage.write_audit(audit)
    print(f"Generated tests correct: {format_ratio(Ratio(audit.correct, audit.total))}")
    for problem_id, ratio in sorted(audit.per_problem.items()):
        print(f"  {problem_id}: {format_ratio(ratio)}")
