import logging
from pathlib import Path
from typing import Annotated

import typer

from specine.utils import (
    RichHelpPanel,
    Settings,
    SettingsError,
    get_logger,
    load_settings,
    print_error,
)

app = typer.Typer(
    name="specine",
    help=(
        "Align misperceived programming specifications for model-driven code"
        " generation, and benchmark the pipeline"
    ),
    no_args_is_help=True,
)


class CLIContext:
    def __init__(self, debug: bool = False, config_path: Path | None = None):
        self.debug = debug
        self.log_level = logging.DEBUG if debug else logging.WARNING
        self.logger = get_logger(level=self.log_level)
        self.config_path = config_path
        self.__settings: Settings | None = None

    @property
    def settings(self) -> Settings:
        """Effective settings, loaded on first use.

        Raises:
            SettingsError: If the configuration file is missing or invalid.
        """
        if self.__settings is None:
            self.__settings = load_settings(self.config_path)
        return self.__settings


@app.callback()
def main(
    ctx: typer.Context,
    debug: Annotated[bool, typer.Option(help="Enable debug logging")] = False,
    config: Annotated[
        Path | None,
        typer.Option(
            "--config",
            help="TOML settings file (defaults to $SPECINE_CONFIG)",
            dir_okay=False,
        ),
    ] = None,
):
    ctx.obj = CLIContext(debug=debug, config_path=config)


def settings_or_exit(ctx: typer.Context) -> Settings:
    try:
        return ctx.obj.settings
    except SettingsError as ex:
        print_error(f"Invalid configuration: {ex}")
        raise typer.Exit(code=1) from ex


import specine.commands  # noqa: E402, F401
from specine.commands.analyze_cmd import app as analyze_app  # noqa: E402
from specine.commands.config_cmd import app as cfg_app  # noqa: E402

app.add_typer(analyze_app, rich_help_panel=RichHelpPanel.INSPECTION.value)
app.add_typer(cfg_app)
