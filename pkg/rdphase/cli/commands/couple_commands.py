"""
The `couple` subcommand: merge probabilities of a coupling along a δ grid.
"""

import click

from rdphase.cli.formatters import echo_rows
from rdphase.cli.options import common_options, handle_errors
from rdphase.cli.session import RunContext
from rdphase.core.config import build_solver_config
from rdphase.core.field import Field
from rdphase.coupling.engine import (
    coupling_success_experiment,
    make_streams,
    marginal_law_check,
    run_coupling,
    success_is_monotone,
)
from rdphase.coupling.models import CouplingKind
from rdphase.utils.audit import ResultTable

TRIAL_COLUMNS = ["replica", "kind", "delta", "tau_or_timeout", "merged"]
SUCCESS_COLUMNS = ["delta", "successes", "trials", "probability", "ci_low", "ci_high"]
MARGINAL_COLUMNS = ["time", "observable", "coupled", "reference", "z_score"]


@click.command("couple")
@common_options
@handle_errors
def couple(**options):
    """
    Runs `replicas` couplings from ((c₀ + δ/2)𝟙, c₀𝟙) for every δ in
    `coupling.deltas` and reports how many merged before `coupling.t_max`.

    Example:
        rdphase couple --set coupling.kind=am --set coupling.deltas=0.4,0.2,0.1,0.05
    """
    run = RunContext.open("couple", **options)
    section = run.settings.coupling
    kind = CouplingKind(section.kind)
    cfg = build_solver_config(run.settings, t_end=section.t_max)
    points, trials = coupling_success_experiment(
        section.deltas,
        kind,
        cfg,
        run.replicas,
        run.seed,
        c0=section.level,
        horizon=section.t_max,
        merge_tol=section.merge_tol,
        workers=run.workers,
    )
    run.add_table("coupling.csv", ResultTable(TRIAL_COLUMNS, "coupling")).extend(trials)
    rows = [p.model_dump() for p in points]
    run.add_table("coupling_success.csv", ResultTable(SUCCESS_COLUMNS)).extend(rows)
    echo_rows(f"{kind.value} coupling", rows, ["delta", "successes", "probability"])

    run.harness.check(
        "success non-increasing in distance",
        lambda: (success_is_monotone(points), "success probabilities along δ", {}),
    )
    if kind in (CouplingKind.NATURAL, CouplingKind.PM):

        def ordering():
            high = Field.constant(cfg.grid, section.level + max(section.deltas) / 2.0)
            low = Field.constant(cfg.grid, section.level)
            outcome = run_coupling(
                high, low, kind, cfg, make_streams(kind, run.seed, 0), horizon=section.t_max
            )
            cells = (len(outcome.times) - 1) * cfg.grid.points
            fraction = outcome.ordering_violations / cells if cells else 0.0
            return fraction < 0.01, f"violation fraction {fraction:.3g}", {
                "fraction": fraction
            }

        run.harness.check("ordering preserved", ordering)

    report = None
    if section.marginal_replicas > 0:
        report = marginal_law_check(
            kind,
            Field.constant(cfg.grid, section.level + max(section.deltas) / 2.0),
            Field.constant(cfg.grid, section.level),
            cfg,
            section.marginal_replicas,
            run.seed,
            times=(section.t_max / 2.0, section.t_max),
            workers=run.workers,
        )
        run.add_table("marginal_law.csv", ResultTable(MARGINAL_COLUMNS, "marginal")).extend(
            c.model_dump() for c in report.comparisons
        )
        run.harness.check(
            "marginal law",
            lambda: (
                report.passed,
                ", ".join(
                    f"{c.observable}@{c.time:g} z={c.z_score:.2f}" for c in report.comparisons
                ),
                {f"{c.observable}@{c.time:g}": c.z_score for c in report.comparisons},
            ),
        )
    run.finish(extra={"marginal_law": report.model_dump() if report else None})
