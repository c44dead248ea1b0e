import typer
from rich import print
from rich.panel import Panel

from .models import Ratio, Variant


def print_info(message: str, with_icon=True) -> None:
    print(f"{':information: ' if with_icon else ''}{message}")


def print_success(message: str) -> None:
    print(Panel(message, title="Success", style="bold green"))


def print_warning(message: str) -> None:
    print(f"[bold yellow]:warning:[/bold yellow] {message}")


def print_error(message: str) -> None:
    print(Panel(message, title="Error", style="bold red"))


def format_ratio(ratio: Ratio | None) -> str:
    """Format a ratio as "passed/total (pp.pp%)", or "-" when absent."""
    if ratio is None or ratio.absent:
        return "-"
    return f"{ratio} ({ratio.percent:.2f}%)"


def validate_variant(name: str | None) -> Variant | None:
    """Validates a pipeline variant name.

    Args:
        name (str | None): The variant name to validate.

    Raises:
        typer.BadParameter: If the name is not a known variant.

    Returns:
        Variant | None: The parsed variant or None.
    """
    if name is None:
        return None
    try:
        return Variant.parse(name)
    except ValueError as ex:
        raise typer.BadParameter(str(ex)) from ex


def validate_variant_list(names: str) -> list[Variant]:
    """Validates a comma-separated list of pipeline variant names.

    Raises:
        typer.BadParameter: If the list is empty or holds an unknown variant.

    Returns:
        list[Variant]: The parsed variants in the given order, duplicates removed.
    """
    variants: list[Variant] = []
    for name in names.split(","):
        if not name.strip():
            continue
        variant = validate_variant(name)
        if variant is not None and variant not in variants:
            variants.append(variant)
    if not variants:
        raise typer.BadParameter("at least one variant is required")
    return variants
