"""
The `appendix` subcommand: closed-form estimates against their Monte Carlo oracles.
"""

from typing import Optional

import click

from rdphase.appendix.battery import AppendixValidator
from rdphase.cli.options import common_options, handle_errors
from rdphase.cli.session import RunContext

REPORT_FILE = "appendix_report.json"


@click.command("appendix")
@click.option(
    "--scale",
    type=click.Choice(["quick", "full"]),
    default=None,
    help="Overrides appendix.scale.",
)
@common_options
@handle_errors
def appendix(scale: Optional[str], **options):
    """
    Runs the whole battery and writes a JSON report.

    Example:
        rdphase appendix --scale full --seed 3 --check
    """
    if scale is not None:
        options["overrides"] = tuple(options["overrides"]) + (f"appendix.scale={scale}",)
    run = RunContext.open("appendix", **options)
    validator = AppendixValidator(
        seed=run.seed, scale=run.settings.appendix.scale, workers=run.workers
    )
    failures = validator.run_all_checks()
    validator.to_json(run.path(REPORT_FILE))
    run.files.append(run.path(REPORT_FILE))
    for result in validator.results:
        run.harness.record(result)
    run.finish(extra={"scale": validator.scale, "failures": failures})
