import typer

app = typer.Typer(
    name="analyze", help="Analyze the traces of a finished run", no_args_is_help=True
)

from .rules_cmd import rules  # noqa: E402
from .tests_cmd import tests  # noqa: E402

__all__ = ["app", "rules", "tests"]
