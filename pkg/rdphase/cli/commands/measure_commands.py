"""
The `measure` subcommand: empirical invariant measure along one long run.
"""

from typing import Dict

import click
import numpy as np

from rdphase.cli.formatters import echo_rows
from rdphase.cli.options import common_options, handle_errors
from rdphase.cli.session import RunContext
from rdphase.core.config import build_initial_field, build_solver_config
from rdphase.core.exceptions import DomainError
from rdphase.core.field import Field
from rdphase.dynamics.noise import NoiseStream
from rdphase.dynamics.solver import SolverConfig
from rdphase.ergodics.measure import (
    DEFAULT_QUANTILES,
    EmpiricalMeasure,
    MIN_MEASURE_SNAPSHOTS,
    MIN_TAIL_SNAPSHOTS,
    ergodic_agreement,
    kb_sample,
    lower_tail_curve,
    stationarity_check,
)
from rdphase.ergodics.support import (
    MIN_MODULUS_POINTS,
    CantorSet,
    dimension_doubling,
    modulus_estimator,
)
from rdphase.utils.audit import ResultTable
from rdphase.utils.logging import get_logger

logger = get_logger(__name__)

MIN_TAIL_SLOPE = 0.1
MODULUS_BAND = (0.5, 2.0)
MODULUS_SHARE = 0.8
CANTOR_DEPTH = 8
DIMENSION_TOLERANCE = 0.2
SUPPORT_COLUMNS = ["t", "limsup_stat", "liminf_stat"]
AGREEMENT_COLUMNS = [
    "functional",
    "mean_a",
    "mean_b",
    "mean_difference",
    "stderr",
    "z_score",
]
SUMMARY_COLUMNS = ["functional", "count", "mean", "stderr"] + [
    f"q{q:g}" for q in DEFAULT_QUANTILES
]


@click.command("measure")
@common_options
@handle_errors
def measure(**options):
    """
    Samples ψ every `measure.thinning` after `measure.burn_in` for
    `measure.total` time units and summarizes the inf, sup, mean and Hölder
    functionals.

    Example:
        rdphase measure --set measure.total=500 --set model.lambda=0.3
    """
    run = RunContext.open("measure", **options)
    section = run.settings.measure
    cfg = build_solver_config(run.settings)
    psi0 = build_initial_field(run.settings, cfg.grid)
    sample = kb_sample(
        cfg,
        section.burn_in,
        section.thinning,
        section.total,
        NoiseStream(run.seed, 0),
        psi0=psi0,
        alphas=section.alphas,
    )

    names = sample.functional_names
    samples = run.add_table("measure_samples.csv", ResultTable(["t"] + names, "samples"))
    values = {name: sample.functional(name) for name in names}
    for i, t in enumerate(sample.times):
        samples.record(dict({name: values[name][i] for name in names}, t=t))

    summary = run.add_table("measure_summary.csv", ResultTable(SUMMARY_COLUMNS, "summary"))
    tail = None
    if len(sample) >= MIN_MEASURE_SNAPSHOTS:
        summary.extend(sample.summary())
        echo_rows("empirical measure", summary.rows, ["functional", "mean", "stderr"])
        rows = stationarity_check(sample)
        run.harness.check(
            "stationary halves",
            lambda: (
                all(r.passed for r in rows),
                ", ".join(f"{r.functional} z={r.z_score:.2f}" for r in rows),
                {r.functional: r.z_score for r in rows},
            ),
        )
    else:
        logger.warning("only %d snapshots, summary left empty", len(sample))
    if len(sample) >= MIN_TAIL_SNAPSHOTS:
        tail = lower_tail_curve(sample, section.eps)
        run.add_table("lower_tail.csv", ResultTable(["eps", "fraction"], "tail")).extend(
            {"eps": e, "fraction": f} for e, f in zip(tail.eps, tail.fractions)
        )
        if tail.slope is not None:
            slope = tail.slope
            run.harness.check(
                "lower tail vanishes",
                lambda: (
                    slope >= MIN_TAIL_SLOPE,
                    f"log-log slope {slope:.3g}, floor {MIN_TAIL_SLOPE:g}",
                    {"slope": slope},
                ),
            )

    support = None
    if cfg.grid.points >= MIN_MODULUS_POINTS and cfg.lam > 0.0 and len(sample):
        support = _support_diagnostics(run, sample, cfg)

    agreement = None
    if section.agreement_replicas > 0:
        compare = Field.from_function(
            cfg.grid,
            lambda x: section.compare_level + section.compare_amplitude * np.cos(np.pi * x),
        )
        agreement = ergodic_agreement(
            psi0,
            compare,
            build_solver_config(run.settings, t_end=section.burn_in + section.total),
            section.agreement_replicas,
            run.seed,
            window_start=section.burn_in,
            workers=run.workers,
        )
        run.add_table("agreement.csv", ResultTable(AGREEMENT_COLUMNS, "agreement")).extend(
            r.model_dump() for r in agreement.rows
        )
        run.harness.check(
            "ergodic agreement",
            lambda: (
                agreement.passed,
                ", ".join(f"{r.functional} z={r.z_score:.2f}" for r in agreement.rows),
                {r.functional: r.z_score for r in agreement.rows},
            ),
        )

    if not sample.extinct:
        low = float(values["inf"].min()) if len(sample) else 0.0
        run.harness.check(
            "positive snapshots",
            lambda: (len(sample) > 0 and low > 0.0, f"smallest infimum {low:.3g}", {}),
        )
    run.finish(
        extra={
            "snapshots": len(sample),
            "extinct": sample.extinct,
            "extinction_time": sample.extinction_time,
            "lower_tail": tail.model_dump() if tail else None,
            "agreement": agreement.model_dump() if agreement else None,
            "support": support,
        }
    )


def _support_diagnostics(
    run: RunContext, sample: EmpiricalMeasure, cfg: SolverConfig
) -> Dict[str, float]:
    """Moduli of continuity per snapshot and the Cantor image dimension of the last."""
    low, high = MODULUS_BAND
    table = run.add_table("support.csv", ResultTable(SUPPORT_COLUMNS, "support"))
    inside = 0
    for t, snapshot in zip(sample.times, sample.snapshots):
        try:
            estimate = modulus_estimator(snapshot, cfg.diffusion, cfg.lam)
        except DomainError:
            logger.debug("t=%g: σ vanishes on the snapshot, modulus skipped", t)
            continue
        table.record(
            {"t": t, "limsup_stat": estimate.limsup_stat, "liminf_stat": estimate.liminf_stat}
        )
        if all(low <= s <= high for s in (estimate.limsup_stat, estimate.liminf_stat)):
            inside += 1
    share = inside / len(table.rows) if table.rows else 0.0
    dimension = dimension_doubling(sample.snapshots[-1], CantorSet(CANTOR_DEPTH)).dimension

    run.harness.check(
        "modulus of continuity",
        lambda: (
            share >= MODULUS_SHARE,
            f"{share:.0%} of {len(table.rows)} snapshots in [{low:g}, {high:g}]",
            {"share": share},
        ),
    )
    run.harness.check(
        "Cantor image dimension",
        lambda: (
            abs(dimension - 1.0) <= DIMENSION_TOLERANCE,
            f"box dimension {dimension:.3g} against 1",
            {"dimension": dimension},
        ),
    )
    return {"modulus_share": share, "cantor_dimension": dimension}
