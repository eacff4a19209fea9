# rdphase/cli/formatters.py

from pathlib import Path
from typing import Any, Dict, Sequence

import click

from rdphase.testing.harness import AcceptanceHarness
from rdphase.utils.audit import format_value


def _short(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return format_value(value)


def echo_rows(title: str, rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> None:
    """Prints a compact, left-aligned table of selected columns."""
    click.secho(title, bold=True)
    if not rows:
        click.echo("  (no rows)")
        return
    cells = [[_short(row.get(c)) for c in columns] for row in rows]
    widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(columns)]
    click.echo("  " + "  ".join(c.ljust(w) for c, w in zip(columns, widths)))
    for row in cells:
        click.echo("  " + "  ".join(v.ljust(w) for v, w in zip(row, widths)))


def echo_metrics(title: str, metrics: Dict[str, Any]) -> None:
    click.secho(title, bold=True)
    for key, value in metrics.items():
        click.echo(f"  {key}: {_short(value)}")


def echo_written(files: Sequence[Path]) -> None:
    for path in files:
        click.echo(f"wrote {path}")


def echo_checks(harness: AcceptanceHarness) -> None:
    for result in harness.results:
        if result.passed:
            click.secho(f"✓ {result.name}", fg="green")
        else:
            click.secho(f"✗ {result.name}: {result.detail}", fg="red")
