import typer

app = typer.Typer(
    name="config", help="Inspect settings for the specine CLI", no_args_is_help=True
)

from .view_cmd import view  # noqa: E402

__all__ = ["app", "view"]
