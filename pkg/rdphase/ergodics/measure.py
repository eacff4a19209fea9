# rdphase/ergodics/measure.py

"""
Empirical invariant measures built by time averaging one long trajectory, and
the statistics computed from them.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from rdphase.core.exceptions import UsageError
from rdphase.core.field import (
    Field,
    dyadic_lags,
    holder_seminorm,
    infimum,
    spatial_mean,
    supremum,
)
from rdphase.dynamics.noise import NoiseStream
from rdphase.dynamics.solver import Integrator, SolverConfig, Trajectory, simulate
from rdphase.utils.logging import get_logger
from rdphase.utils.parallel import map_replicas
from rdphase.utils.stats import RunningMoments, linear_fit, mean_and_stderr

logger = get_logger(__name__)

MIN_AVERAGING_TIME = 10.0
MIN_MEASURE_SNAPSHOTS = 30
MIN_TAIL_SNAPSHOTS = 200
EXTINCTION_LEVEL = 1e-12
DEFAULT_QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


def _window(traj: Trajectory, start: Optional[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Left-endpoint weights and indices of the records from `start` on."""
    times = traj.times
    begin = 0 if start is None else int(np.searchsorted(times, start - 1e-12))
    weights = np.diff(times[begin:])
    return weights, np.arange(begin, times.size - 1)


def time_average(traj: Trajectory, series: np.ndarray, start: Optional[float] = None):
    """(1/T)∫ series dt over the recorded times (left-endpoint rule)."""
    weights, index = _window(traj, start)
    span = float(weights.sum())
    if span <= 0.0:
        raise UsageError("time average over an empty window")
    return float(np.dot(weights, series[index]) / span)


def time_average_occupation(
    traj: Trajectory, eps: float, start: Optional[float] = None
) -> float:
    """
    (1/T)·∫ 1{L_t < ε} dt.

    Raises:
        UsageError: If the trajectory covers less than 10 time units.
    """
    if traj.times[-1] - traj.times[0] < MIN_AVERAGING_TIME - 1e-9:
        raise UsageError(
            f"occupation needs a trajectory of length >= {MIN_AVERAGING_TIME}"
        )
    return time_average(traj, (traj.infima < eps).astype(float), start)


def _functional_values(snapshots: Sequence[Field], name: str) -> np.ndarray:
    if name == "inf":
        return np.array([infimum(f) for f in snapshots])
    if name == "sup":
        return np.array([supremum(f) for f in snapshots])
    if name == "mean":
        return np.array([spatial_mean(f) for f in snapshots])
    if name.startswith("holder_"):
        alpha = float(name.split("_", 1)[1])
        return np.array(
            [holder_seminorm(f, alpha, dyadic_lags(f.grid.points)) for f in snapshots]
        )
    raise UsageError(f"unknown functional '{name}'")


@dataclass
class EmpiricalMeasure:
    """
    Snapshots of one trajectory taken after burn-in at a fixed thinning.

    Functionals: ``inf``, ``sup``, ``mean`` and ``holder_<alpha>``.
    """

    times: List[float]
    snapshots: List[Field]
    alphas: Tuple[float, ...] = (0.25, 0.4, 0.49)
    extinct: bool = False
    extinction_time: Optional[float] = None
    _cache: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.snapshots)

    @property
    def functional_names(self) -> List[str]:
        return ["inf", "sup", "mean"] + [f"holder_{a:g}" for a in self.alphas]

    def require(self, count: int = MIN_MEASURE_SNAPSHOTS) -> None:
        if len(self) < count:
            raise UsageError(f"statistic needs >= {count} snapshots, have {len(self)}")

    def functional(self, name: str) -> np.ndarray:
        if name not in self._cache:
            self._cache[name] = _functional_values(self.snapshots, name)
        return self._cache[name]

    def summary(self, quantiles: Sequence[float] = DEFAULT_QUANTILES) -> List[dict]:
        """One row per functional: mean, standard error and quantiles."""
        self.require()
        rows = []
        for name in self.functional_names:
            values = self.functional(name)
            mean, stderr = mean_and_stderr(list(values))
            row = {"functional": name, "count": len(values), "mean": mean, "stderr": stderr}
            for q, v in zip(quantiles, np.quantile(values, quantiles)):
                row[f"q{q:g}"] = float(v)
            rows.append(row)
        return rows


def kb_sample(
    cfg: SolverConfig,
    burn_in: float,
    thinning: float,
    total: float,
    stream: NoiseStream,
    psi0: Optional[Field] = None,
    alphas: Sequence[float] = (0.25, 0.4, 0.49),
) -> EmpiricalMeasure:
    """
    Samples ψ at burn_in + i·thinning for 0 <= i·thinning <= total along one
    trajectory from 𝟙 (or `psi0`).

    If U_t falls below 1e-12 the run is flagged extinct and sampling stops.

    Raises:
        UsageError: burn_in < 1 or a non-positive thinning or total.
    """
    if burn_in < 1.0:
        raise UsageError(f"burn-in must be >= 1, got {burn_in}")
    if not (thinning > 0.0 and total > 0.0):
        raise UsageError("thinning and total sampling time must be positive")
    start = Field.ones(cfg.grid) if psi0 is None else psi0
    integrator = Integrator(start, cfg, stream)
    count = int(math.floor(total / thinning + 1e-9)) + 1
    times: List[float] = []
    snapshots: List[Field] = []
    extinct_at: Optional[float] = None
    for i in range(count):
        target = burn_in + i * thinning
        while integrator.time < target - cfg.dt / 2.0:
            integrator.advance(1)
            if float(integrator.values.max()) < EXTINCTION_LEVEL:
                extinct_at = integrator.time
                break
        if extinct_at is not None:
            logger.warning("extinction at t=%.6g; %d snapshots kept", extinct_at, len(snapshots))
            break
        times.append(integrator.time)
        snapshots.append(integrator.field)
    return EmpiricalMeasure(
        times=times,
        snapshots=snapshots,
        alphas=tuple(alphas),
        extinct=extinct_at is not None,
        extinction_time=extinct_at,
    )


class FunctionalAgreement(BaseModel):
    functional: str
    mean_a: float
    mean_b: float
    mean_difference: float
    stderr: float
    z_score: float


class AgreementReport(BaseModel):
    replicas: int
    window_start: float
    rows: List[FunctionalAgreement]
    threshold: float = 3.0

    @property
    def passed(self) -> bool:
        return all(r.z_score <= self.threshold for r in self.rows)


def _time_averages(traj: Trajectory, start: float) -> Dict[str, float]:
    return {
        "L": time_average(traj, traj.infima, start),
        "U": time_average(traj, traj.suprema, start),
        "mean": time_average(traj, traj.means, start),
    }


def ergodic_agreement(
    psi0_a: Field,
    psi0_b: Field,
    cfg: SolverConfig,
    replicas: int,
    seed: int,
    window_start: float = 10.0,
    workers: Optional[int] = None,
) -> AgreementReport:
    """
    Time averages of L_t, U_t and the spatial mean from two starts, each driven
    by its own replicas (ids r and replicas + r); the two-sample difference of
    the ensemble means must vanish within 3σ.

    Raises:
        UsageError: If either start is identically zero.
    """
    if not (np.any(psi0_a.values > 0.0) and np.any(psi0_b.values > 0.0)):
        raise UsageError("both initial profiles must be positive somewhere")

    def one(replica: int) -> Tuple[Dict[str, float], Dict[str, float]]:
        a = simulate(psi0_a, cfg, NoiseStream(seed, replica))
        b = simulate(psi0_b, cfg, NoiseStream(seed, replicas + replica))
        return _time_averages(a, window_start), _time_averages(b, window_start)

    pairs = map_replicas(one, range(replicas), workers)
    rows = []
    for name in ("L", "U", "mean"):
        mean_a, se_a = mean_and_stderr([p[0][name] for p in pairs])
        mean_b, se_b = mean_and_stderr([p[1][name] for p in pairs])
        diff_mean = mean_a - mean_b
        diff_se = math.hypot(se_a, se_b)
        if diff_se > 0.0:
            z = abs(diff_mean) / diff_se
        else:
            z = 0.0 if diff_mean == 0.0 else math.inf
        rows.append(
            FunctionalAgreement(
                functional=name,
                mean_a=mean_a,
                mean_b=mean_b,
                mean_difference=diff_mean,
                stderr=diff_se,
                z_score=z,
            )
        )
    return AgreementReport(replicas=replicas, window_start=window_start, rows=rows)


class LowerTailCurve(BaseModel):
    eps: List[float]
    fractions: List[float]
    slope: Optional[float] = None
    intercept: Optional[float] = None


def lower_tail_curve(measure: EmpiricalMeasure, eps_grid: Sequence[float]) -> LowerTailCurve:
    """
    μ{inf ω <= ε} per ε, with the slope of log fraction against log ε fitted on
    the fractions strictly between 0 and 1.
    """
    measure.require(MIN_TAIL_SNAPSHOTS)
    eps = sorted(float(e) for e in eps_grid)
    if not eps or eps[0] <= 0.0:
        raise UsageError("eps grid must hold positive values")
    infima = measure.functional("inf")
    fractions = [float(np.mean(infima <= e)) for e in eps]
    inside = [(e, f) for e, f in zip(eps, fractions) if 0.0 < f < 1.0]
    if len(inside) < 2:
        return LowerTailCurve(eps=eps, fractions=fractions)
    xs, ys = zip(*inside)
    fit = linear_fit(np.log(xs), np.log(ys))
    return LowerTailCurve(
        eps=eps, fractions=fractions, slope=fit.slope, intercept=fit.intercept
    )


class StationarityRow(BaseModel):
    functional: str
    first_mean: float
    second_mean: float
    z_score: float
    passed: bool


def stationarity_check(
    measure: EmpiricalMeasure, functionals: Optional[Sequence[str]] = None
) -> List[StationarityRow]:
    """First-half against second-half means of each functional, within 3σ."""
    measure.require()
    half = len(measure) // 2
    rows = []
    for name in functionals or measure.functional_names:
        values = measure.functional(name)
        m1, s1 = mean_and_stderr(list(values[:half]))
        m2, s2 = mean_and_stderr(list(values[half:]))
        scale = math.hypot(s1, s2)
        z = abs(m1 - m2) / scale if scale > 0 else (0.0 if m1 == m2 else math.inf)
        rows.append(
            StationarityRow(
                functional=name, first_mean=m1, second_mean=m2, z_score=z, passed=z <= 3.0
            )
        )
    return rows


class HolderMoments(BaseModel):
    alpha: float
    k: float
    moments: List[float]

    @property
    def spread(self) -> float:
        """Largest over smallest window moment."""
        low = min(self.moments)
        return max(self.moments) / low if low > 0 else math.inf


def holder_moments(
    measure: EmpiricalMeasure, alpha: float, k: float, windows: int = 4
) -> HolderMoments:
    """E‖ω‖^k_{C^α} over consecutive windows of the snapshot sequence."""
    measure.require()
    if windows < 1 or windows > len(measure):
        raise UsageError(f"cannot split {len(measure)} snapshots into {windows} windows")
    values = _functional_values(measure.snapshots, f"holder_{alpha:g}") ** k
    moments = []
    for chunk in np.array_split(values, windows):
        acc = RunningMoments()
        for v in chunk:
            acc.update(float(v))
        moments.append(acc.mean)
    return HolderMoments(alpha=alpha, k=k, moments=moments)
