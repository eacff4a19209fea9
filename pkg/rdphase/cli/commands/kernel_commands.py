"""
The `kernel` subcommand: cross-checks of the two heat-kernel representations.
"""

import click
import numpy as np

from rdphase.cli.formatters import echo_metrics
from rdphase.cli.options import common_options, handle_errors
from rdphase.cli.session import RunContext
from rdphase.core.config import build_kernel_config
from rdphase.dynamics.kernel import (
    chapman_kolmogorov_residual,
    cross_representation_errors,
    total_mass,
)
from rdphase.utils.audit import ResultTable

KERNEL_COLUMNS = ["t", "separation", "image_sum", "fourier", "abs_error"]
DEFAULT_SEPARATIONS = 40


@click.command("kernel")
@common_options
@handle_errors
def kernel(**options):
    """
    Tabulates |image sum - theta series| over a (t, x - z) lattice and checks
    the Chapman–Kolmogorov identity and unit mass.

    Example:
        rdphase kernel --out results/kernel --check
    """
    run = RunContext.open("kernel", **options)
    section = run.settings.kernel
    cfg = build_kernel_config(run.settings)
    separations = section.separations or list(
        np.linspace(-1.0, 1.0, DEFAULT_SEPARATIONS, endpoint=False)
    )
    rows = cross_representation_errors(section.times, separations, cfg)
    table = run.add_table("kernel_errors.csv", ResultTable(KERNEL_COLUMNS, "kernel"))
    table.extend(rows)

    worst = max(r["abs_error"] for r in rows) if rows else 0.0
    residual = max(
        chapman_kolmogorov_residual(t, s, x, z, cfg)
        for t, s, x, z in ((0.05, 0.1, 0.3, -0.4), (0.5, 1.0, -0.9, 0.8))
    )
    mass_error = max(abs(total_mass(t, 0.25, cfg) - 1.0) for t in section.times)
    metrics = {
        "pairs": len(rows),
        "max_abs_error": worst,
        "chapman_kolmogorov_residual": residual,
        "max_mass_error": mass_error,
    }
    echo_metrics("heat kernel", metrics)

    run.harness.check(
        "representations agree",
        lambda: (worst <= 1e-10, f"max |image - fourier| = {worst:.3g}", metrics),
    )
    run.harness.check(
        "chapman-kolmogorov",
        lambda: (residual <= 1e-8, f"residual {residual:.3g}", {}),
    )
    run.harness.check(
        "unit mass", lambda: (mass_error <= 1e-10, f"mass error {mass_error:.3g}", {})
    )
    run.finish(extra={"kernel": metrics})
