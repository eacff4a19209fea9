"""
Options and error handling shared by every subcommand.
"""

import functools

import click

from rdphase.core.exceptions import RDPhaseError


def common_options(fn):
    """Adds the flags every experiment accepts."""
    options = [
        click.option(
            "--config",
            "config_path",
            default=None,
            help="Flat dotted-key configuration file.",
        ),
        click.option("--seed", type=int, default=None, help="Master seed."),
        click.option(
            "--replicas", type=int, default=None, help="Number of independent replicas."
        ),
        click.option(
            "--out", default="out", show_default=True, help="Output directory."
        ),
        click.option(
            "--check", is_flag=True, help="Exit with code 4 if an acceptance check fails."
        ),
        click.option(
            "--resume", is_flag=True, help="Skip work already present in the output."
        ),
        click.option(
            "--set",
            "overrides",
            multiple=True,
            metavar="KEY=VALUE",
            help="Override one configuration key (repeatable).",
        ),
        click.option(
            "--workers", type=int, default=None, help="Worker threads for replicas."
        ),
        click.option("--verbose", "-v", is_flag=True, help="Log progress to stderr."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def handle_errors(fn):
    """
    Turns library errors into their one-line reason on stderr and the exit
    code that error class maps to.
    """

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except RDPhaseError as e:
            click.secho(e.reason(), fg="red", err=True)
            click.get_current_context().exit(e.exit_code)

    return wrapper
