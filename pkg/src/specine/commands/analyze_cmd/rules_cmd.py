from pathlib import Path
from typing import Annotated

import typer
from rich import print
from rich.table import Table

from specine.services import RunStorage, rule_effectiveness
from specine.utils import TraceDecodeError, print_error

from . import app


@app.command("rules", help="Share of problems for which each alignment rule helped.")
def rules(
    ctx: typer.Context,
    run_dir: Annotated[
        Path, typer.Argument(help="Run directory", exists=True, file_okay=False)
    ],
) -> None:
    storage = RunStorage(run_dir, log_level=ctx.obj.log_level)
    try:
        records = storage.read_traces()
    except TraceDecodeError as ex:
        print_error(str(ex))
        raise typer.Exit(code=1) from ex
    if not records:
        print_error(f"No traces found in {run_dir}")
        raise typer.Exit(code=1)

    effectiveness = rule_effectiveness([record.result for record in records])
    storage.write_rules(effectiveness)

    table = Table(title=f"Rule effectiveness over {len(records)} problem(s)")
    table.add_column("rule", no_wrap=True)
    table.add_column("effective", justify="right", no_wrap=True)
    for rule, share in effectiveness.items():
        table.add_row(rule.title, f"{share:.2f}%")
    print(table)
