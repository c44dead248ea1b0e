from pathlib import Path
from typing import Annotated

import typer

from specine.cli import app
from specine.services import (
    SourceFormat,
    carve_dataset,
    load_source,
    sample_stratified,
    save_dataset,
)
from specine.utils import (
    DEFAULT_PUBLIC_CARVE,
    DatasetParseError,
    DuplicateProblemError,
    NotEnoughTestsError,
    ProblemValidationError,
    RichHelpPanel,
    SampleSizeError,
    print_error,
    print_info,
    print_success,
    print_warning,
)


@app.command(
    "prepare",
    help="Sample a dataset by difficulty and carve public tests from private ones",
    rich_help_panel=RichHelpPanel.DATASETS.value,
)
def prepare(
    ctx: typer.Context,
    dataset: Annotated[
        Path, typer.Argument(help="Source dataset file", exists=True, dir_okay=False)
    ],
    out: Annotated[Path, typer.Argument(help="Prepared dataset file", dir_okay=False)],
    sample: Annotated[
        int | None, typer.Option(help="Problems to sample (default: keep all)", min=0)
    ] = None,
    public: Annotated[
        int, typer.Option(help="Private tests moved to public per problem", min=0)
    ] = DEFAULT_PUBLIC_CARVE,
    seed: Annotated[int, typer.Option(help="Random seed")] = 0,
    source_format: Annotated[
        SourceFormat,
        typer.Option("--from", help="Dataset file or upstream benchmark format"),
    ] = SourceFormat.JSONL,
    unit_tests: Annotated[
        Path | None,
        typer.Option(
            help="xCodeEval unit-test database (with --from xcodeval)",
            exists=True,
            dir_okay=False,
        ),
    ] = None,
) -> None:
    logger = ctx.obj.logger
    try:
        source, notes = load_source(dataset, source_format, unit_tests)
        if notes:
            for note in notes:
                logger.debug("%s: %s", dataset.name, note)
            hint = "" if logger.verbose else "; run with --debug to list them"
            print_info(f"{len(notes)} conversion note(s) for {dataset.name}{hint}")
        prepared = source
        if sample is not None:
            prepared, warnings = sample_stratified(prepared, sample, seed)
            for warning in warnings:
                print_warning(warning)
        prepared = carve_dataset(prepared, public, seed)
        save_dataset(prepared, out)
    except (
        ValueError,
        DatasetParseError,
        DuplicateProblemError,
        ProblemValidationError,
        NotEnoughTestsError,
        SampleSizeError,
    ) as ex:
        logger.exception("prepare failed")
        print_error(str(ex))
        raise typer.Exit(code=1) from ex

    print_success(
        f"Wrote {len(prepared.problems)} of {len(source.problems)} problem(s)"
        f" with {public} public test(s) each to {out}"
    )
