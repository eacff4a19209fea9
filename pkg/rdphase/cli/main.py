"""
Command-line interface for rdphase.
"""

import sys
from typing import List, Optional

import click

from rdphase import __version__
from rdphase.cli.commands.appendix_commands import appendix
from rdphase.cli.commands.chain_commands import chain
from rdphase.cli.commands.couple_commands import couple
from rdphase.cli.commands.kernel_commands import kernel
from rdphase.cli.commands.measure_commands import measure
from rdphase.cli.commands.simulate_commands import simulate
from rdphase.cli.commands.sweep_commands import sweep


@click.group()
@click.version_option(__version__, prog_name="rdphase")
def cli():
    """rdphase Command-Line Interface."""
    pass


for command in (simulate, kernel, couple, chain, measure, sweep, appendix):
    cli.add_command(command)


def run(argv: Optional[List[str]] = None) -> int:
    """
    Runs one command and returns its exit code instead of exiting.

    0 success, 2 configuration or usage errors, 3 numerical or output
    failures, 4 failed acceptance checks under --check.
    """
    try:
        rv = cli.main(args=argv, prog_name="rdphase", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    return rv if isinstance(rv, int) else 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
