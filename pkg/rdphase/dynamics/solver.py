# rdphase/dynamics/solver.py

"""
Time stepping for ∂ₜψ = ∂²ₓψ + V(ψ) + λσ(ψ)Ẇ on the periodic grid.

One step of every scheme treats the reaction and the noise explicitly:

    u' = u + dt·Δu + dt·V(u) + λσ(u)√(dt/dx)·ξ

and differs only in how the discrete Laplacian Δ is applied:

* ``explicit``: forward Euler on the second difference; needs dt <= dx²/2.
* ``semi_implicit_laplacian``: backward Euler, (I - dtΔ)u' = rest.
* ``crank_nicolson``: the trapezoidal rule, whose stationary spectrum for the
  linearised noise matches the continuum one at any dt.
"""

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from rdphase.core.exceptions import (
    BlowUpError,
    ConfigurationError,
    DomainError,
    UsageError,
)
from rdphase.core.field import Field, TorusGrid, spatial_mean
from rdphase.dynamics.noise import NoiseSlab, NoiseStream
from rdphase.dynamics.reaction import DiffusionSpec, PotentialSpec, reaction_drift
from rdphase.utils.audit import config_digest
from rdphase.utils.logging import get_logger
from rdphase.utils.parallel import map_replicas
from rdphase.utils.stats import linear_fit, mean_and_stderr

logger = get_logger(__name__)

MIN_MOMENT_REPLICAS = 30


class Scheme(str, Enum):
    EXPLICIT = "explicit"
    SEMI_IMPLICIT = "semi_implicit_laplacian"
    CRANK_NICOLSON = "crank_nicolson"


def default_dt(grid: TorusGrid, scheme: Scheme) -> float:
    """dx²/4 for the explicit scheme, dx otherwise."""
    dx = grid.spacing
    return dx * dx / 4.0 if Scheme(scheme) == Scheme.EXPLICIT else dx


@dataclass(frozen=True)
class SolverConfig:
    """
    Everything one trajectory needs besides its initial data and noise.

    Example:
        cfg = SolverConfig(
            grid=TorusGrid(128),
            dt=default_dt(TorusGrid(128), Scheme.EXPLICIT),
            t_end=5.0,
            lam=0.2,
            potential=PotentialSpec.kpp(),
            diffusion=DiffusionSpec.linear(1.0),
        )
    """

    grid: TorusGrid
    dt: float
    t_end: float
    lam: float
    potential: PotentialSpec
    diffusion: DiffusionSpec
    truncation_n: Optional[int] = None
    scheme: Scheme = Scheme.EXPLICIT
    clamp_nonnegative: bool = True
    snapshot_times: Tuple[float, ...] = ()
    record_every: int = 1
    constant_drift: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(
            self, "snapshot_times", tuple(float(t) for t in self.snapshot_times)
        )
        if not self.dt > 0.0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0.0:
            raise ConfigurationError(f"t_end must be >= 0, got {self.t_end}")
        if self.lam < 0.0:
            raise ConfigurationError(f"lambda must be >= 0, got {self.lam}")
        if self.truncation_n is not None and self.truncation_n < 1:
            raise ConfigurationError("truncation N must be a positive integer")
        if self.record_every < 1:
            raise ConfigurationError("record_every must be >= 1")
        dx = self.grid.spacing
        if self.scheme == Scheme.EXPLICIT and self.dt > dx * dx / 2.0 * (1 + 1e-12):
            raise ConfigurationError(
                f"explicit scheme is unstable: dt={self.dt:.3g} > dx²/2={dx * dx / 2:.3g}"
            )
        times = self.snapshot_times
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigurationError("snapshot times must be strictly increasing")
        if times and (times[0] < 0.0 or times[-1] > self.t_end + self.dt / 2.0):
            raise ConfigurationError(
                f"snapshot times must lie in [0, t_end={self.t_end}]"
            )

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def with_changes(self, **changes) -> "SolverConfig":
        return replace(self, **changes)

    def describe(self) -> Dict[str, object]:
        return {
            "points": self.grid.points,
            "dt": self.dt,
            "t_end": self.t_end,
            "lambda": self.lam,
            "potential": self.potential.name,
            "drift": self.potential.drift_enabled,
            "sigma": self.diffusion.name,
            "truncation_n": self.truncation_n,
            "scheme": self.scheme.value,
            "clamp": self.clamp_nonnegative,
            "snapshots": list(self.snapshot_times),
            "constant_drift": self.constant_drift,
        }

    def digest(self) -> str:
        return config_digest(json.dumps(self.describe(), sort_keys=True))


@lru_cache(maxsize=64)
def laplacian_eigenvalues(points: int) -> np.ndarray:
    """μ_m = (4/dx²)·sin²(πm/J), the symbol of -Δ on rfft modes m = 0..J/2."""
    dx = 2.0 / points
    m = np.arange(points // 2 + 1)
    mu = 4.0 / dx**2 * np.sin(math.pi * m / points) ** 2
    mu.setflags(write=False)
    return mu


def _second_difference(u: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(u, 1) + np.roll(u, -1) - 2.0 * u) / (dx * dx)


def _spectral_solve(
    u: np.ndarray, rest: np.ndarray, cfg: SolverConfig
) -> np.ndarray:
    mu = laplacian_eigenvalues(cfg.grid.points)
    a = cfg.dt * mu
    points = cfg.grid.points
    # the mean is carried outside the transform so constants stay exact
    mean = float(np.mean(u))
    if cfg.scheme == Scheme.SEMI_IMPLICIT:
        transformed = np.fft.rfft(u - mean + rest) / (1.0 + a)
        return mean + np.fft.irfft(transformed, n=points)
    transformed = ((1.0 - a / 2.0) * np.fft.rfft(u - mean) + np.fft.rfft(rest)) / (
        1.0 + a / 2.0
    )
    return mean + np.fft.irfft(transformed, n=points)


def step_values(
    u: np.ndarray, xi: np.ndarray, cfg: SolverConfig, step_index: int = 0
) -> np.ndarray:
    """
    One step on raw grid values.

    Raises:
        BlowUpError: If the result holds a non-finite value.
    """
    dt, dx = cfg.dt, cfg.grid.spacing
    if cfg.constant_drift is not None:
        rest = np.full_like(u, dt * cfg.constant_drift)
    else:
        rest = dt * reaction_drift(cfg.potential, u, cfg.truncation_n)
    if cfg.lam != 0.0:
        rest = rest + cfg.lam * cfg.diffusion(u) * math.sqrt(dt / dx) * xi
    if cfg.scheme == Scheme.EXPLICIT:
        out = u + dt * _second_difference(u, dx) + rest
    else:
        out = _spectral_solve(u, rest, cfg)
    if not np.all(np.isfinite(out)):
        raise BlowUpError(step_index, (step_index + 1) * dt)
    if cfg.clamp_nonnegative:
        np.maximum(out, 0.0, out=out)
    return out


def step(f: Field, slab: NoiseSlab, cfg: SolverConfig) -> Field:
    """Advances `f` by one time step driven by `slab`."""
    if f.grid != cfg.grid or slab.grid != cfg.grid:
        raise UsageError("field, slab and solver config must share one grid")
    return f.with_values(step_values(f.values, slab.xi, cfg))


Observer = Callable[["Integrator"], None]


class Integrator:
    """
    A field being stepped forward in time.

    Couplings and chain stages drive integrators slab by slab through
    `step_with`; plain runs use `advance`, which draws from the attached stream.
    """

    def __init__(
        self,
        psi0: Field,
        cfg: SolverConfig,
        stream: Optional[NoiseStream] = None,
        t0: float = 0.0,
    ):
        if psi0.grid != cfg.grid:
            raise UsageError("initial field and solver config use different grids")
        self.cfg = cfg
        self.stream = stream
        self.t0 = t0
        self.steps_taken = 0
        self.values = np.array(psi0.values)
        self._observers: List[Observer] = []

    @property
    def time(self) -> float:
        return self.t0 + self.steps_taken * self.cfg.dt

    @property
    def field(self) -> Field:
        return Field(self.cfg.grid, self.values)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)

    @property
    def absorbed(self) -> bool:
        """Exact zero stays zero unless a constant drift is imposed."""
        return self.cfg.constant_drift is None and self.is_zero

    def add_observer(self, observer: Observer) -> None:
        self._observers.append(observer)

    def set_values(self, values: np.ndarray) -> None:
        self.values = np.array(values, dtype=np.float64)

    def step_with(self, slab: NoiseSlab) -> None:
        if not self.absorbed:
            self.values = step_values(
                self.values, slab.xi, self.cfg, self.steps_taken
            )
        self.steps_taken += 1
        for observer in self._observers:
            observer(self)

    def advance(self, steps: int = 1) -> None:
        if self.stream is None:
            raise UsageError("advance() needs a noise stream")
        for _ in range(steps):
            if self.absorbed:
                # zero is absorbing; keep the counter in step without drawing
                self.stream.skip(1)
                self.steps_taken += 1
                for observer in self._observers:
                    observer(self)
            else:
                self.step_with(self.stream.next_slab(self.cfg.grid))

    def advance_to(self, t: float) -> None:
        remaining = int(round((t - self.time) / self.cfg.dt))
        if remaining < 0:
            raise UsageError(f"cannot advance backwards from t={self.time} to t={t}")
        self.advance(remaining)


class LyapunovEstimate(BaseModel):
    """Slope of log U_t over a time window."""

    slope: float
    ci_low: float
    ci_high: float
    points: int
    extinct: bool = False
    hit_time: Optional[float] = None


@dataclass
class Trajectory:
    """
    Observables of one run: (t, L_t, U_t, mean) every `record_every` steps and
    full fields at the configured snapshot times.
    """

    times: np.ndarray
    infima: np.ndarray
    suprema: np.ndarray
    means: np.ndarray
    snapshots: List[Tuple[float, Field]] = field(default_factory=list)
    config_digest: str = ""
    seed_identity: Dict[str, int] = field(default_factory=dict)
    dt: float = 0.0
    extinction_time: Optional[float] = None

    def snapshot_at(self, t: float) -> Field:
        """
        Raises:
            UsageError: If no snapshot was taken within dt/2 of `t`.
        """
        tolerance = self.dt / 2.0 if self.dt > 0 else 1e-12
        for time, snapshot in self.snapshots:
            if abs(time - t) <= tolerance:
                return snapshot
        raise UsageError(f"no snapshot recorded at t={t}")

    def observable_rows(self) -> List[Dict[str, float]]:
        return [
            {"t": float(t), "L": float(lo), "U": float(hi), "mean": float(m)}
            for t, lo, hi, m in zip(self.times, self.infima, self.suprema, self.means)
        ]

    @classmethod
    def from_series(
        cls, times: Sequence[float], suprema: Sequence[float], **kwargs
    ) -> "Trajectory":
        """Builds an observable-only trajectory, e.g. from a known profile."""
        suprema = np.asarray(suprema, dtype=np.float64)
        return cls(
            times=np.asarray(times, dtype=np.float64),
            infima=kwargs.pop("infima", suprema),
            suprema=suprema,
            means=kwargs.pop("means", suprema),
            **kwargs,
        )


class _Recorder:
    """Collects observables and snapshots from an integrator as it runs."""

    def __init__(self, integrator: Integrator):
        cfg = integrator.cfg
        self.cfg = cfg
        self._snapshot_steps = {
            int(round(t / cfg.dt)): t for t in cfg.snapshot_times
        }
        self._rows: List[Tuple[float, float, float, float]] = []
        self.snapshots: List[Tuple[float, Field]] = []
        self.extinction_time: Optional[float] = None
        self(integrator)
        integrator.add_observer(self)

    def __call__(self, integrator: Integrator) -> None:
        n = integrator.steps_taken
        values = integrator.values
        if n % self.cfg.record_every == 0 or n == self.cfg.steps:
            self._rows.append(
                (
                    integrator.time,
                    float(values.min()),
                    float(values.max()),
                    spatial_mean(values),
                )
            )
        if n in self._snapshot_steps:
            self.snapshots.append((integrator.time, integrator.field))
        if self.extinction_time is None and integrator.is_zero:
            self.extinction_time = integrator.time
            logger.debug("field reached exact zero at t=%.6g", integrator.time)

    def trajectory(self, stream: Optional[NoiseStream]) -> Trajectory:
        rows = np.array(self._rows, dtype=np.float64).reshape(-1, 4)
        identity = {}
        if stream is not None:
            identity = {"master_seed": stream.master_seed, "replica_id": stream.replica_id}
        return Trajectory(
            times=rows[:, 0],
            infima=rows[:, 1],
            suprema=rows[:, 2],
            means=rows[:, 3],
            snapshots=self.snapshots,
            config_digest=self.cfg.digest(),
            seed_identity=identity,
            dt=self.cfg.dt,
            extinction_time=self.extinction_time,
        )


def _check_start(psi0: Field, cfg: SolverConfig) -> None:
    if cfg.clamp_nonnegative and np.any(psi0.values < 0.0):
        raise UsageError("initial data must be nonnegative when clamping is on")


def simulate(psi0: Field, cfg: SolverConfig, stream: NoiseStream) -> Trajectory:
    """
    Runs one trajectory to `cfg.t_end`.

    Raises:
        UsageError: If psi0 has negative values while clamping is on.
        BlowUpError: If a step produces a non-finite value.
    """
    _check_start(psi0, cfg)
    integrator = Integrator(psi0, cfg, stream)
    recorder = _Recorder(integrator)
    integrator.advance(cfg.steps)
    return recorder.trajectory(stream)


def _check_ordered(psi0_low: Field, psi0_high: Field) -> None:
    if psi0_low.grid != psi0_high.grid:
        raise UsageError("ordered pair must share one grid")
    if np.any(psi0_low.values > psi0_high.values):
        raise UsageError("pair initial data must satisfy psi0_low <= psi0_high")


def simulate_pair_shared_noise(
    psi0_low: Field, psi0_high: Field, cfg: SolverConfig, stream: NoiseStream
) -> Tuple[Trajectory, Trajectory]:
    """Runs two initial conditions on identical slabs (the natural coupling)."""
    _check_ordered(psi0_low, psi0_high)
    _check_start(psi0_low, cfg)
    low = Integrator(psi0_low, cfg)
    high = Integrator(psi0_high, cfg)
    recorders = (_Recorder(low), _Recorder(high))
    for _ in range(cfg.steps):
        slab = stream.next_slab(cfg.grid)
        low.step_with(slab)
        high.step_with(slab)
    return recorders[0].trajectory(stream), recorders[1].trajectory(stream)


class OrderingAudit(BaseModel):
    """Space-time points where the lower run exceeded the upper one."""

    points: int
    violations: int
    max_violation: float

    @property
    def fraction(self) -> float:
        return self.violations / self.points if self.points else 0.0


def ordering_audit(
    psi0_low: Field,
    psi0_high: Field,
    cfg: SolverConfig,
    stream: NoiseStream,
    tol: float = 1e-9,
) -> OrderingAudit:
    """Counts cells and steps with ψ_low - ψ_high > tol under shared noise."""
    _check_ordered(psi0_low, psi0_high)
    low = Integrator(psi0_low, cfg)
    high = Integrator(psi0_high, cfg)
    violations = 0
    worst = 0.0
    for _ in range(cfg.steps):
        slab = stream.next_slab(cfg.grid)
        low.step_with(slab)
        high.step_with(slab)
        excess = low.values - high.values
        violations += int(np.count_nonzero(excess > tol))
        worst = max(worst, float(excess.max()))
    return OrderingAudit(
        points=cfg.steps * cfg.grid.points, violations=violations, max_violation=worst
    )


def run_ensemble(
    psi0: Field,
    cfg: SolverConfig,
    seed: int,
    replicas: int,
    workers: Optional[int] = None,
    first_replica: int = 0,
) -> List[Trajectory]:
    """Independent replicas, returned in replica order for any worker count."""
    if replicas < 1:
        raise UsageError("an ensemble needs at least one replica")
    ids = range(first_replica, first_replica + replicas)
    logger.info("simulating %d replicas (%s)", replicas, cfg.scheme.value)
    return map_replicas(
        lambda r: simulate(psi0, cfg, NoiseStream(seed, r)), ids, workers
    )


def estimate_lyapunov(
    traj: Trajectory, window: Tuple[float, float]
) -> LyapunovEstimate:
    """
    Least-squares slope of log U_t over `window`.

    If U_t hits exact zero before the window closes, the slope is -inf and the
    hit time is reported.

    Raises:
        UsageError: If the window is empty, reversed or outside the trajectory.
    """
    t0, t1 = window
    times = traj.times
    slack = max(traj.dt, 1e-12)
    if not t1 > t0 or t0 < times[0] - slack or t1 > times[-1] + slack:
        raise UsageError(
            f"window ({t0}, {t1}) outside the trajectory [{times[0]}, {times[-1]}]"
        )
    zeros = np.nonzero((traj.suprema == 0.0) & (times <= t1 + slack))[0]
    if zeros.size:
        hit = float(times[zeros[0]])
        return LyapunovEstimate(
            slope=-math.inf,
            ci_low=-math.inf,
            ci_high=-math.inf,
            points=0,
            extinct=True,
            hit_time=hit,
        )
    inside = (times >= t0 - 1e-12) & (times <= t1 + 1e-12)
    if np.count_nonzero(inside) < 2:
        raise UsageError("window holds fewer than two recorded times")
    fit = linear_fit(times[inside], np.log(traj.suprema[inside]))
    return LyapunovEstimate(
        slope=fit.slope, ci_low=fit.ci_low, ci_high=fit.ci_high, points=fit.points
    )


def moment_estimator(
    trajectories: Sequence[Trajectory], k: float, t: float
) -> Tuple[float, float]:
    """
    E|ψ(t, x)|^k averaged over replicas and grid points, with its standard error.

    Raises:
        UsageError: Fewer than 30 replicas, or `t` was not snapshotted.
        DomainError: k < 2.
    """
    if len(trajectories) < MIN_MOMENT_REPLICAS:
        raise UsageError(
            f"moment_estimator needs >= {MIN_MOMENT_REPLICAS} replicas, "
            f"got {len(trajectories)}"
        )
    if k < 2.0:
        raise DomainError(f"moment order must be >= 2, got {k}")
    per_replica = [
        float(np.mean(np.abs(traj.snapshot_at(t).values) ** k))
        for traj in trajectories
    ]
    return mean_and_stderr(per_replica)
