"""
The `sweep` subcommand: the empirical phase diagram along a λ grid.
"""

from typing import Dict, List

import click

from rdphase.cli.formatters import echo_metrics, echo_rows
from rdphase.cli.options import common_options, handle_errors
from rdphase.cli.session import RunContext
from rdphase.core.config import build_initial_field, build_solver_config
from rdphase.ergodics.phase import (
    PhasePoint,
    phase_sweep,
    sweep_digests,
    transition_window,
    verdicts_monotone,
)
from rdphase.utils.audit import ResultTable, read_csv_rows

PHASE_FILE = "phase.csv"


def phase_columns(eps_grid: List[float]) -> List[str]:
    return (
        ["lambda", "slope", "slope_ci_lo", "slope_ci_hi"]
        + [f"occupation@{e:g}" for e in eps_grid]
        + [
            "mean_infimum",
            "extinct_fraction",
            "persistent_fraction",
            "verdict",
            "point_digest",
        ]
    )


def phase_row(point: PhasePoint, eps_grid: List[float]) -> Dict[str, object]:
    row = {
        "lambda": point.lam,
        "slope": point.slope,
        "slope_ci_lo": point.slope_ci_low,
        "slope_ci_hi": point.slope_ci_high,
        "mean_infimum": point.mean_infimum,
        "extinct_fraction": point.extinct_fraction,
        "persistent_fraction": point.persistent_fraction,
        "verdict": point.verdict,
        "point_digest": point.digest,
    }
    row.update({f"occupation@{e:g}": point.occupation[float(e)] for e in eps_grid})
    return row


@click.command("sweep")
@common_options
@handle_errors
def sweep(**options):
    """
    Classifies each λ of `sweep.lambdas` as extinct, persistent or undecided.

    With --resume, points already in phase.csv (matched by digest) are kept
    and not recomputed.

    Example:
        rdphase sweep --config kpp.cfg --replicas 50 --set sweep.lambdas=0.05,3
    """
    run = RunContext.open("sweep", **options)
    section = run.settings.sweep
    eps_grid = [float(e) for e in section.eps]
    cfg = build_solver_config(run.settings, t_end=section.t_end)
    psi0 = build_initial_field(run.settings, cfg.grid)
    columns = phase_columns(eps_grid)

    digests = set(
        sweep_digests(
            section.lambdas,
            cfg,
            run.seed,
            run.replicas,
            section.window_start,
            eps_grid,
            section.eps_floor,
        )
    )
    previous: List[Dict[str, str]] = []
    existing = run.path(PHASE_FILE)
    if run.experiment.resume and existing.exists():
        previous = [
            row
            for row in read_csv_rows(existing)
            if list(row) == columns and row["point_digest"] in digests
        ]
    points = phase_sweep(
        section.lambdas,
        cfg,
        psi0,
        run.replicas,
        run.seed,
        section.window_start,
        eps_grid=eps_grid,
        eps_floor=section.eps_floor,
        workers=run.workers,
        skip_digests={row["point_digest"] for row in previous},
    )
    rows = previous + [phase_row(p, eps_grid) for p in points]
    rows.sort(key=lambda r: float(r["lambda"]))
    run.add_table(PHASE_FILE, ResultTable(columns, "phase")).extend(rows)

    echo_rows("phase diagram", rows, ["lambda", "slope", "verdict"])
    if points:
        window = transition_window(points)
        echo_metrics("transition window", window.model_dump())

    def occupation_nested():
        for p in points:
            fractions = [p.occupation[e] for e in sorted(p.occupation, reverse=True)]
            if any(b > a for a, b in zip(fractions, fractions[1:])):
                return False, f"occupation rises as eps shrinks at lambda={p.lam:g}", {}
        return True, "occupation is non-increasing in eps", {}

    def verdicts_separate():
        verdicts = [str(getattr(r["verdict"], "value", r["verdict"])) for r in rows]
        return (
            verdicts_monotone(verdicts),
            "verdicts by lambda: " + ", ".join(verdicts),
            {},
        )

    run.harness.check("occupation monotone in eps", occupation_nested)
    run.harness.check("verdicts ordered in lambda", verdicts_separate)
    run.finish(extra={"resumed_points": len(rows) - len(points)})
