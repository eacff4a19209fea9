"""
The `simulate` subcommand: an ensemble of trajectories from one configuration.
"""

import click
import numpy as np

from rdphase.cli.formatters import echo_rows
from rdphase.cli.options import common_options, handle_errors
from rdphase.cli.session import RunContext
from rdphase.core.config import build_initial_field, build_solver_config
from rdphase.dynamics.solver import run_ensemble
from rdphase.utils.audit import ResultTable


@click.command("simulate")
@common_options
@handle_errors
def simulate(**options):
    """
    Runs `replicas` trajectories and writes their observables and snapshots.

    Example:
        rdphase simulate --config kpp.cfg --seed 7 --set solver.snapshots=1,5
    """
    run = RunContext.open("simulate", **options)
    cfg = build_solver_config(run.settings)
    psi0 = build_initial_field(run.settings, cfg.grid)
    trajectories = run_ensemble(psi0, cfg, run.seed, run.replicas, run.workers)

    observables = run.add_table(
        "observables.csv", ResultTable(["replica", "t", "L", "U", "mean"], "observables")
    )
    columns = ["replica", "t"] + [f"x_{i}" for i in range(cfg.grid.points)]
    snapshots = run.add_table("snapshots.csv", ResultTable(columns, "snapshots"))
    for replica, traj in enumerate(trajectories):
        observables.extend(dict(row, replica=replica) for row in traj.observable_rows())
        for t, field in traj.snapshots:
            row = {"replica": replica, "t": t}
            row.update({f"x_{i}": v for i, v in enumerate(field.values)})
            snapshots.record(row)

    final = [
        {
            "replica": r,
            "L": float(traj.infima[-1]),
            "U": float(traj.suprema[-1]),
            "extinction": traj.extinction_time,
        }
        for r, traj in enumerate(trajectories)
    ]
    echo_rows(f"t = {cfg.t_end:g}", final, ["replica", "L", "U", "extinction"])

    def finite():
        ok = all(np.all(np.isfinite(t.suprema)) for t in trajectories)
        return ok, "observables are finite", {}

    def nonnegative():
        low = min(float(t.infima.min()) for t in trajectories)
        return (not cfg.clamp_nonnegative) or low >= 0.0, f"min L = {low:.3g}", {}

    run.harness.check("finite observables", finite)
    run.harness.check("nonnegative under clamping", nonnegative)
    run.finish(extra={"solver": cfg.describe()})
