from pathlib import Path
from typing import Annotated

import typer
from rich import print
from rich.markup import escape

from specine.cli import app
from specine.services import find_trace
from specine.utils import (
    HierarchicalScore,
    IterationRecord,
    Ratio,
    RichHelpPanel,
    TraceDecodeError,
    TraceRecord,
    UnknownProblemError,
    format_ratio,
    print_error,
)


def _score_line(score: HierarchicalScore | None, private: Ratio | None) -> str:
    if score is None:
        return "  no score"
    line = (
        f"  public {format_ratio(score.primary)}"
        f"  generated {format_ratio(score.secondary)}"
    )
    if private is not None:
        line += f"\n  private {format_ratio(private)}"
    return line


def _iteration_lines(record: IterationRecord) -> list[str]:
    if record.rewrite is not None:
        proposal = "rewritten specification"
    else:
        proposal = ", ".join(i.rule.title for i in record.proposed) or "no proposal"
    if record.failed:
        return [
            f"iteration {record.iteration} (failed)",
            f"  rules: {escape(proposal)}",
            f"  error: {escape(record.error or '')}",
        ]
    decision = "retained" if record.retained else "discarded"
    return [
        f"iteration {record.iteration} ({decision})",
        f"  rules: {escape(proposal)}",
        _score_line(record.score, record.private),
    ]


def render_trace(record: TraceRecord) -> list[str]:
    """Human-readable timeline of one problem's alignment search."""
    result = record.result
    lines = [f"problem {escape(record.problem_id)} (variant {result.variant})"]
    if result.error is not None:
        lines.append(f"error: {escape(result.error)}")
        return lines

    lines.append("initial")
    lines.append(_score_line(result.initial_score, result.initial_private))
    if result.gate_passed:
        lines.append("gate passed: the initial code is the final output")
        return lines

    lines.extend(line for entry in result.trace for line in _iteration_lines(entry))

    best = result.best_candidate
    best_private = None
    if best is not None and best.iteration == 0:
        best_private = result.initial_private
    elif best is not None:
        best_private = next(
            (r.private for r in result.trace if r.candidate == best), None
        )
    lines.append(f"best: iteration {best.iteration if best else '-'}")
    lines.append(_score_line(result.best_score, best_private))
    if result.best_spec is not None and result.best_spec.retained:
        rules = " -> ".join(i.rule.title for i in result.best_spec.retained)
        lines.append(f"retained rules: {escape(rules)}")
    for warning in result.warnings:
        lines.append(f"warning: {escape(warning)}")
    return lines


@app.command(
    "trace",
    help="Show the iteration timeline recorded for a problem",
    rich_help_panel=RichHelpPanel.INSPECTION.value,
)
def trace(
    path: Annotated[
        Path,
        typer.Argument(
            help="Trace file, traces directory or run directory", exists=True
        ),
    ],
    problem: Annotated[
        str | None, typer.Option(help="Problem id (required for directories)")
    ] = None,
) -> None:
    try:
        record = find_trace(path, problem)
    except (TraceDecodeError, UnknownProblemError) as ex:
        print_error(str(ex))
        raise typer.Exit(code=1) from ex

    for line in render_trace(record):
        print(line)
