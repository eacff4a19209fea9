# rdphase/ergodics/phase.py

"""
Phase-diagram sweeps over the noise strength λ.

Each λ point runs an ensemble, fits the decay rate of log U_t per replica and
measures how much time the infimum spends below small levels. A point is
``extinct`` when at least 90% of its replicas die out or decay (slope interval
below -1e-3), or when the ensemble slope interval itself lies below -1e-3. It is
``persistent`` when at least 90% of its replicas keep a time-averaged infimum
above 10·ε_floor while spending less than 5% of the time with inf ψ < ε_min.
"""

import json
import math
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel
from scipy import stats

from rdphase.core.exceptions import UsageError
from rdphase.core.field import Field
from rdphase.dynamics.noise import NoiseStream
from rdphase.dynamics.reaction import PotentialSpec
from rdphase.dynamics.solver import Integrator, SolverConfig, estimate_lyapunov, run_ensemble
from rdphase.ergodics.measure import time_average, time_average_occupation
from rdphase.utils.audit import config_digest
from rdphase.utils.logging import get_logger
from rdphase.utils.stats import linear_fit, mean_and_stderr

logger = get_logger(__name__)

EXTINCTION_SLOPE = -1e-3
OCCUPATION_THRESHOLD = 0.05
REPLICA_MAJORITY = 0.9


class Verdict(str, Enum):
    EXTINCT = "extinct"
    PERSISTENT = "persistent"
    UNDECIDED = "undecided"


class PhasePoint(BaseModel):
    lam: float
    slope: float
    slope_ci_low: float
    slope_ci_high: float
    occupation: Dict[float, float]
    mean_infimum: float
    extinct_fraction: float
    persistent_fraction: float = 0.0
    replicas: int
    verdict: Verdict
    digest: str = ""


def point_digest(cfg: SolverConfig, lam: float, seed: int, replicas: int, extra: dict) -> str:
    """Identifies a sweep point so a resumed sweep can skip it."""
    payload = dict(cfg.with_changes(lam=lam).describe(), seed=seed, replicas=replicas)
    payload.update(extra)
    return config_digest(json.dumps(payload, sort_keys=True, default=str))


def sweep_digests(
    lambdas: Sequence[float],
    cfg: SolverConfig,
    seed: int,
    replicas: int,
    window_start: float,
    eps_grid: Sequence[float],
    eps_floor: float,
) -> List[str]:
    """The digest of every point of a sweep, in grid order."""
    extra = {
        "window_start": window_start,
        "eps": [float(e) for e in eps_grid],
        "eps_floor": eps_floor,
    }
    return [point_digest(cfg, float(lam), seed, replicas, extra) for lam in lambdas]


def _replica_persists(
    occupation_small: float, mean_infimum: float, eps_floor: float
) -> bool:
    return mean_infimum > 10.0 * eps_floor and occupation_small < OCCUPATION_THRESHOLD


def _classify(
    ci_high: float, extinct_fraction: float, persistent_fraction: float
) -> Verdict:
    if extinct_fraction >= REPLICA_MAJORITY or ci_high < EXTINCTION_SLOPE:
        return Verdict.EXTINCT
    if persistent_fraction >= REPLICA_MAJORITY:
        return Verdict.PERSISTENT
    return Verdict.UNDECIDED


def _ensemble_slope(slopes: Sequence[float]) -> Tuple[float, float, float]:
    """
    Mean slope of the surviving replicas with its t-interval. Extinct replicas
    (slope -inf) pull the lower end to -inf; the verdict weighs them through
    the extinct fraction.
    """
    finite = [s for s in slopes if math.isfinite(s)]
    if not finite:
        return -math.inf, -math.inf, -math.inf
    mean, stderr = mean_and_stderr(finite)
    if len(finite) < 2:
        low, high = mean, mean
    else:
        half = float(stats.t.ppf(0.975, len(finite) - 1)) * stderr
        low, high = mean - half, mean + half
    if len(finite) < len(slopes):
        low = -math.inf
    return mean, low, high


def evaluate_point(
    lam: float,
    trajectories: Sequence,
    window: Tuple[float, float],
    eps_grid: Sequence[float],
    eps_floor: float,
) -> PhasePoint:
    """Turns one λ ensemble into a `PhasePoint`."""
    estimates = [estimate_lyapunov(traj, window) for traj in trajectories]
    slope, low, high = _ensemble_slope([e.slope for e in estimates])
    extinct = [e.extinct or e.ci_high < EXTINCTION_SLOPE for e in estimates]
    per_replica = {
        float(eps): [
            time_average_occupation(t, eps, start=window[0]) for t in trajectories
        ]
        for eps in eps_grid
    }
    occupation = {eps: mean_and_stderr(v)[0] for eps, v in per_replica.items()}
    infima = [time_average(t, t.infima, start=window[0]) for t in trajectories]
    smallest = per_replica[min(per_replica)] if per_replica else [0.0] * len(infima)
    persists = [
        _replica_persists(occ, inf, eps_floor) for occ, inf in zip(smallest, infima)
    ]
    extinct_fraction = sum(extinct) / len(extinct)
    persistent_fraction = sum(persists) / len(persists)
    return PhasePoint(
        lam=lam,
        slope=slope,
        slope_ci_low=low,
        slope_ci_high=high,
        occupation=occupation,
        mean_infimum=mean_and_stderr(infima)[0],
        extinct_fraction=extinct_fraction,
        persistent_fraction=persistent_fraction,
        replicas=len(trajectories),
        verdict=_classify(high, extinct_fraction, persistent_fraction),
    )


def phase_sweep(
    lambdas: Sequence[float],
    cfg: SolverConfig,
    psi0: Field,
    replicas: int,
    seed: int,
    window_start: float,
    eps_grid: Sequence[float] = (0.1, 0.01, 0.001),
    eps_floor: float = 1e-3,
    workers: Optional[int] = None,
    skip_digests: Iterable[str] = (),
) -> List[PhasePoint]:
    """
    Runs one ensemble per λ (point i uses replica ids i·replicas + r) and
    classifies it. Points whose digest is in `skip_digests` are not rerun and
    are left out of the result.

    Raises:
        UsageError: If the λ grid is not strictly increasing.
    """
    lambdas = [float(v) for v in lambdas]
    if not lambdas or any(b <= a for a, b in zip(lambdas, lambdas[1:])):
        raise UsageError("lambda grid must be non-empty and strictly increasing")
    if not 0.0 <= window_start < cfg.t_end:
        raise UsageError("sweep window must start inside [0, t_end)")
    skip = set(skip_digests)
    window = (window_start, cfg.t_end)
    digests = sweep_digests(
        lambdas, cfg, seed, replicas, window_start, eps_grid, eps_floor
    )
    points = []
    for i, (lam, digest) in enumerate(zip(lambdas, digests)):
        if digest in skip:
            logger.info("lambda=%g already computed, skipping", lam)
            continue
        trajectories = run_ensemble(
            psi0, cfg.with_changes(lam=lam), seed, replicas, workers, first_replica=i * replicas
        )
        point = evaluate_point(lam, trajectories, window, eps_grid, eps_floor)
        point.digest = digest
        logger.info("lambda=%g: slope %.4g, verdict %s", lam, point.slope, point.verdict.value)
        points.append(point)
    return points


class TransitionWindow(BaseModel):
    """The λ range between the last persistent and the first extinct point."""

    last_persistent: Optional[float]
    first_extinct: Optional[float]
    undecided: List[float]
    monotone: bool


def verdicts_monotone(verdicts: Sequence[str]) -> bool:
    """Whether the verdicts, ordered by λ, never step back towards persistence."""
    rank = {Verdict.PERSISTENT: 0, Verdict.UNDECIDED: 1, Verdict.EXTINCT: 2}
    ranks = [rank[Verdict(v)] for v in verdicts]
    return all(b >= a for a, b in zip(ranks, ranks[1:]))


def transition_window(points: Sequence[PhasePoint]) -> TransitionWindow:
    """
    Reports the window; `monotone` says whether the verdicts read
    persistent..., undecided..., extinct... along increasing λ.
    """
    ordered = sorted(points, key=lambda p: p.lam)
    persistent = [p.lam for p in ordered if p.verdict == Verdict.PERSISTENT]
    extinct = [p.lam for p in ordered if p.verdict == Verdict.EXTINCT]
    return TransitionWindow(
        last_persistent=max(persistent) if persistent else None,
        first_extinct=min(extinct) if extinct else None,
        undecided=[p.lam for p in ordered if p.verdict == Verdict.UNDECIDED],
        monotone=verdicts_monotone([p.verdict for p in ordered]),
    )


class DominationAudit(BaseModel):
    """ψ against the linear field u (V(u) = u) on shared noise."""

    points: int
    violations: int
    max_excess: float
    psi_rate: Optional[float]
    linear_rate: Optional[float]


def linear_growth_potential() -> PotentialSpec:
    """F ≡ 0, so V(u) = u."""
    return PotentialSpec.tabulated([0.0, 1.0], [0.0, 0.0])


def _growth_rate(times: List[float], sups: List[float]) -> Optional[float]:
    keep = [(t, s) for t, s in zip(times, sups) if s > 0.0]
    if len(keep) < 2:
        return None
    ts, ss = zip(*keep)
    return linear_fit(ts, np.log(ss)).slope


def linear_domination_audit(
    psi0: Field, cfg: SolverConfig, stream: NoiseStream, tol: float = 1e-9
) -> DominationAudit:
    """
    Runs ψ and the linear dominating field u from the same start on the same
    slabs, counting space-time points with ψ - u > tol and fitting the growth
    rates of log sup ψ and log sup u.
    """
    psi = Integrator(psi0, cfg)
    linear = Integrator(psi0, cfg.with_changes(potential=linear_growth_potential()))
    violations = 0
    worst = 0.0
    times, psi_sups, linear_sups = [], [], []
    for _ in range(cfg.steps):
        slab = stream.next_slab(cfg.grid)
        psi.step_with(slab)
        linear.step_with(slab)
        excess = psi.values - linear.values
        violations += int(np.count_nonzero(excess > tol))
        worst = max(worst, float(excess.max()))
        times.append(psi.time)
        psi_sups.append(float(psi.values.max()))
        linear_sups.append(float(linear.values.max()))
    return DominationAudit(
        points=cfg.steps * cfg.grid.points,
        violations=violations,
        max_excess=worst,
        psi_rate=_growth_rate(times, psi_sups),
        linear_rate=_growth_rate(times, linear_sups),
    )


class ExtinctionFit(BaseModel):
    c: float
    residual: float


def extinction_rate_fit(lambdas: Sequence[float], rates: Sequence[float]) -> ExtinctionFit:
    """Least-squares c in rate ≈ 1 - cλ², i.e. (1 - rate) regressed on λ² through 0."""
    lam2 = np.asarray(lambdas, dtype=np.float64) ** 2
    gap = 1.0 - np.asarray(rates, dtype=np.float64)
    if lam2.shape != gap.shape or lam2.size == 0 or not np.any(lam2 > 0):
        raise UsageError("extinction fit needs matching, non-trivial λ and rate lists")
    (c,), residual, _, _ = np.linalg.lstsq(lam2[:, None], gap, rcond=None)
    return ExtinctionFit(c=float(c), residual=float(residual[0]) if residual.size else 0.0)
