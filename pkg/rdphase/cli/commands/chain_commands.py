"""
The `chain` subcommand: the reflected walk, ideal or built from SPDE stages.
"""

import math
from typing import List, Optional

import click
import numpy as np

from rdphase.chain.embedded import run_embedded_chain, sample_stages, stage_statistics
from rdphase.chain.models import ChainConfig, ChainRecord, StageOutcome
from rdphase.chain.walk import (
    MIN_OCCUPATION_ENTRIES,
    excursion_lengths,
    occupation_profile,
    run_ideal_chain,
)
from rdphase.cli.formatters import echo_metrics
from rdphase.cli.options import common_options, handle_errors
from rdphase.cli.session import RunContext
from rdphase.core.config import build_potential, build_solver_config
from rdphase.dynamics.noise import NoiseStream
from rdphase.dynamics.reaction import compute_level_M
from rdphase.utils.audit import ResultTable
from rdphase.utils.parallel import map_replicas

CHAIN_COLUMNS = ["replica", "n", "X_n", "ell_n", "outcome"]
STAGE_COLUMNS = ["stage", "level", "outcome", "duration"]
UPWARD_DRIFT = 2.0 / 3.0
NOISELESS_DURATION = 2.0  # w = L + tL/2 reaches 2L at t = 2
ALPHA_INDEX = 100_000


def _moves(records: List[ChainRecord]) -> np.ndarray:
    """Increments of the random moves, reflection entries left out."""
    moves = []
    for record in records:
        steps = np.diff(record.levels)
        moves.append(steps[record.outcomes != StageOutcome.REFLECT.value])
    return np.concatenate(moves) if moves else np.zeros(0)


def _within(observed: float, expected: float, sigma: float, count: int) -> bool:
    if count == 0:
        return False
    return abs(observed - expected) <= 4.0 * sigma / math.sqrt(count) + 1e-12


@click.command("chain")
@click.option(
    "--mode",
    type=click.Choice(["ideal", "embedded"]),
    default=None,
    help="Overrides chain.mode.",
)
@common_options
@handle_errors
def chain(mode: Optional[str], **options):
    """
    Runs one reflected chain per replica below the level M and checks its
    increments and excursion lengths.

    Example:
        rdphase chain --mode ideal --set chain.p_up=0.75 --check
    """
    if mode is not None:
        options["overrides"] = tuple(options["overrides"]) + (f"chain.mode={mode}",)
    run = RunContext.open("chain", **options)
    section = run.settings.chain
    embedded = section.mode == "embedded"
    cfg = ChainConfig(
        M=compute_level_M(build_potential(run.settings)),
        p_up=section.p_up,
        solver=build_solver_config(run.settings) if embedded else None,
        stage_timeout=section.stage_timeout,
    )
    if embedded:
        records = map_replicas(
            lambda r: run_embedded_chain(cfg, section.stages, NoiseStream(run.seed, r)),
            range(run.replicas),
            run.workers,
        )
    else:
        records = [
            run_ideal_chain(cfg, section.steps, NoiseStream(run.seed, r))
            for r in range(run.replicas)
        ]

    table = run.add_table("chain.csv", ResultTable(CHAIN_COLUMNS, "chain"))
    for replica, record in enumerate(records):
        table.extend(dict(row, replica=replica) for row in record.rows())

    moves = _moves(records)
    betas = np.concatenate([excursion_lengths(r) for r in records])
    metrics = {
        "M": cfg.M,
        "mode": section.mode,
        "moves": int(moves.size),
        "mean_increment": float(moves.mean()) if moves.size else math.nan,
        "hits": int(betas.size),
        "mean_beta": float(betas.mean()) if betas.size else math.nan,
    }
    if records[0].hits.size:
        # αₙ/n at n = ALPHA_INDEX, or at the last hit of a shorter chain
        n = min(ALPHA_INDEX, records[0].hits.size)
        metrics["alpha_rate"] = float(records[0].hits[n - 1]) / n
    if not embedded and len(records[0]) > MIN_OCCUPATION_ENTRIES:
        depths = [2 - cfg.M + d for d in range(5)]
        profile = occupation_profile(records[0], depths)
        metrics["occupation_decay_slope"] = profile.decay_slope
    echo_metrics(f"{section.mode} chain", metrics)

    def contained():
        top = max(int(r.levels.max()) for r in records)
        return top <= cfg.top_level, f"highest level {top}, M-1 = {cfg.top_level}", {}

    def unit_steps():
        ok = all(np.all(np.abs(np.diff(r.levels)) == 1) for r in records)
        return ok, "every entry moves by exactly one level", {}

    run.harness.check("contained below M", contained)
    run.harness.check("unit increments", unit_steps)

    stats = None
    if embedded and section.level is not None:
        results = sample_stages(
            section.level,
            cfg,
            section.stages,
            run.seed,
            run.workers,
            first_replica=run.replicas,
        )
        stages = run.add_table("stages.csv", ResultTable(STAGE_COLUMNS, "stages"))
        stages.extend(
            {"stage": i, "level": r.level, "outcome": r.outcome, "duration": r.duration}
            for i, r in enumerate(results)
        )
        stats = stage_statistics(results)
        echo_metrics(
            f"stages at L = {section.level:g}",
            {"p_up": stats.p_up, "ci": stats.p_up_ci, **stats.outcome_counts},
        )
        floor = UPWARD_DRIFT - 2.0 * math.sqrt(
            UPWARD_DRIFT * (1.0 - UPWARD_DRIFT) / stats.stages
        )
        run.harness.check(
            "upward drift",
            lambda: (
                stats.p_up >= floor,
                f"P(UP) = {stats.p_up:.4g} over {stats.stages} stages, floor {floor:.4g}",
                {},
            ),
        )
        if cfg.solver.lam == 0.0:
            dt = cfg.solver.dt

            def noiseless_duration():
                worst = max(abs(r.duration - NOISELESS_DURATION) for r in results)
                ok = worst <= dt + 1e-12 and stats.p_up == 1.0
                return ok, f"largest |duration - 2| = {worst:.3g}, dt = {dt:.3g}", {}

            run.harness.check("noiseless stage duration", noiseless_duration)

    if not embedded:
        p = cfg.p_up
        drift = 2.0 * p - 1.0
        spread = math.sqrt(max(1.0 - drift**2, 0.0))
        run.harness.check(
            "mean increment",
            lambda: (
                _within(metrics["mean_increment"], drift, spread, moves.size),
                f"{metrics['mean_increment']:.5g} against 2p-1 = {drift:.5g}",
                {},
            ),
        )
        beta_sigma = math.sqrt(4.0 * p * (1.0 - p) / drift**3)
        run.harness.check(
            "mean excursion length",
            lambda: (
                _within(metrics["mean_beta"], 1.0 / drift, beta_sigma, betas.size),
                f"{metrics['mean_beta']:.5g} against 1/(2p-1) = {1.0 / drift:.5g}",
                {},
            ),
        )
    run.finish(
        extra={"chain": metrics, "stages": stats.model_dump() if stats else None}
    )
