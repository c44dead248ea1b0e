import msgspec
import typer
from rich import print
from rich.markup import escape

from specine.cli import settings_or_exit

from . import app


@app.command("view", help="View the effective configuration settings.")
def view(ctx: typer.Context) -> None:
    settings = settings_or_exit(ctx).masked()

    print("Current Configuration Settings:")
    for name, value in msgspec.structs.asdict(settings).items():
        print(f"  {name:<20}: {escape(str(value))}")
