# rdphase/appendix/kit.py

"""
Closed forms of the auxiliary probability estimates, each paired with an
independent quadrature or Monte Carlo companion.

All Gaussian band probabilities here are of the reflection-principle form

    √(2/π) ∫_0^c e^{-x²/2} dx = P(|Z| < c),

evaluated with fixed-order Gauss–Legendre quadrature.
"""

import math
from typing import Callable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate, special, stats

from rdphase.core.exceptions import DomainError, PreconditionError, UsageError
from rdphase.dynamics.kernel import semigroup_multiplier
from rdphase.dynamics.noise import NoiseStream
from rdphase.utils.logging import get_logger
from rdphase.utils.parallel import map_replicas
from rdphase.utils.stats import linear_fit, mean_and_stderr

logger = get_logger(__name__)

BGK_SHIFT = 0.5826
BISECTION_TOL = 1e-12
CDF = Callable[[np.ndarray], np.ndarray]


class QuadratureConfig(BaseModel):
    """Gauss–Legendre settings; integrals over [0, ∞) are cut at `cutoff`."""

    model_config = ConfigDict(frozen=True)

    nodes: int = Field(default=128, ge=64)
    cutoff: float = Field(default=12.0, gt=0)


DEFAULT_QUADRATURE = QuadratureConfig()


class MonteCarloEstimate(BaseModel):
    value: float
    stderr: float
    samples: int


def _estimate(values: Sequence[float]) -> MonteCarloEstimate:
    mean, stderr = mean_and_stderr(values)
    return MonteCarloEstimate(value=mean, stderr=stderr, samples=len(values))


def _batched(total: int, chunk: int) -> List[int]:
    sizes = [chunk] * (total // chunk)
    if total % chunk:
        sizes.append(total % chunk)
    return sizes


def gaussian_band(c: float, quad: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """√(2/π)∫_0^c e^{-x²/2} dx; 0 for c <= 0."""
    if c <= 0.0:
        return 0.0
    upper = min(c, quad.cutoff)
    value, _ = integrate.fixed_quad(
        lambda x: np.exp(-0.5 * x * x), 0.0, upper, n=quad.nodes
    )
    return min(1.0, math.sqrt(2.0 / math.pi) * float(value))


# small-ball estimate


def small_ball_probability(
    eps: float, A: float, quad: QuadratureConfig = DEFAULT_QUADRATURE
) -> float:
    """
    The bound on P{inf_{s<t} M_s >= -ε, ⟨M⟩_t >= A}, which is exact for
    Brownian motion run for time A.

    Raises:
        DomainError: If ε or A is not positive.
    """
    if not (eps > 0.0 and A > 0.0):
        raise DomainError(f"small-ball needs eps, A > 0, got eps={eps}, A={A}")
    if math.isinf(eps):
        return 1.0
    return gaussian_band(eps / math.sqrt(A), quad)


def small_ball_mc(
    eps: float,
    A: float,
    stream: NoiseStream,
    paths: int = 100_000,
    steps: int = 1000,
    chunk: int = 1000,
) -> MonteCarloEstimate:
    """
    Fraction of Brownian paths on [0, A] whose running minimum stays above -ε.

    The walk is observed at `steps` grid times, so the barrier is moved in by
    0.5826·√(A/steps) to stand in for continuous monitoring.
    """
    if not (eps > 0.0 and A > 0.0):
        raise DomainError(f"small-ball needs eps, A > 0, got eps={eps}, A={A}")
    if paths < 2 or steps < 1:
        raise UsageError("small_ball_mc needs >= 2 paths and >= 1 step")
    h = A / steps
    barrier = -eps + BGK_SHIFT * math.sqrt(h)
    hits: List[float] = []
    for size in _batched(paths, chunk):
        rng = stream.next_generator()
        walk = np.cumsum(rng.standard_normal((size, steps)) * math.sqrt(h), axis=1)
        lowest = np.minimum(walk.min(axis=1), 0.0)
        hits.extend((lowest >= barrier).astype(float))
    return _estimate(hits)


# stochastic differential inequality


def _check_sdi(a: float, b: float, t: float, eps: float) -> None:
    if not (a > 0.0 and b > 0.0 and t > 0.0):
        raise DomainError(f"SDI bound needs a, b, t > 0, got a={a}, b={b}, t={t}")
    if not 0.0 < eps <= a * math.exp(t / 2.0):
        raise DomainError(f"eps must lie in (0, a·e^(t/2)], got {eps}")


def sdi_hitting_bound(
    a: float, b: float, t: float, eps: float, quad: QuadratureConfig = DEFAULT_QUADRATURE
) -> float:
    """
    Bound on P{inf_{s<t} X_s > ε², ∫_0^t e^{-s} d⟨X⟩_s / X_s >= b²} for a
    non-negative X from a² with dX <= X dt + dM: the Gaussian band at
    c = 2(a - ε e^{-t/2})/b.

    Raises:
        DomainError: Outside a, b, t > 0 and ε ∈ (0, a·e^{t/2}].
    """
    _check_sdi(a, b, t, eps)
    if math.isinf(b):
        return 0.0
    return gaussian_band(2.0 * (a - eps * math.exp(-t / 2.0)) / b, quad)


def sdi_mc(
    a: float,
    b: float,
    t: float,
    eps: float,
    stream: NoiseStream,
    paths: int = 20_000,
    steps_per_unit: int = 1000,
    chunk: int = 1000,
) -> MonteCarloEstimate:
    """
    Probability of the same joint event for dX = X dt + X dW, sampled exactly
    on a grid as X_s = a²·exp(W_s + s/2). For this X, d⟨X⟩/X = X ds.
    """
    _check_sdi(a, b, t, eps)
    steps = max(1, int(round(t * steps_per_unit)))
    h = t / steps
    s = h * np.arange(1, steps + 1)
    discount = np.exp(-(s - h))
    hits: List[float] = []
    for size in _batched(paths, chunk):
        rng = stream.next_generator()
        w = np.cumsum(rng.standard_normal((size, steps)) * math.sqrt(h), axis=1)
        x = a * a * np.exp(w + s / 2.0)
        left = np.concatenate((np.full((size, 1), a * a), x[:, :-1]), axis=1)
        above = np.minimum(x.min(axis=1), a * a) > eps * eps
        energy = (left * discount).sum(axis=1) * h
        hits.extend((above & (energy >= b * b)).astype(float))
    return _estimate(hits)


# monotone coupling


def default_test_grid() -> np.ndarray:
    return np.linspace(-10.0, 10.0, 2001)


def _right_inverse(u: np.ndarray, start: np.ndarray, H: CDF) -> np.ndarray:
    """inf{y : H(y) > u}, by vectorised bisection seeded at `start`."""
    lo = start.astype(np.float64).copy()
    width = np.ones_like(lo)
    # walk lo down until H(lo) <= u
    bad = H(lo) > u
    for _ in range(64):
        if not np.any(bad):
            break
        lo[bad] -= width[bad]
        width[bad] *= 2.0
        bad = H(lo) > u
    hi = lo + 1.0
    width = np.ones_like(lo)
    short = H(hi) <= u
    for _ in range(64):
        if not np.any(short):
            break
        hi[short] += width[short]
        width[short] *= 2.0
        short = H(hi) <= u
    for _ in range(200):
        gap = hi - lo
        if np.all(gap <= BISECTION_TOL):
            break
        mid = lo + gap / 2.0
        above = H(mid) > u
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return np.where(short, np.inf, hi)


def monotone_coupling(
    x_samples: Sequence[float],
    G: CDF,
    H: CDF,
    test_grid: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Y = H⁻¹(G(X)) with H⁻¹ the right-continuous inverse, located by bisection
    to 1e-12. Whenever G >= H the result satisfies Y >= X samplewise and Y has
    distribution function H.

    Raises:
        PreconditionError: If G < H somewhere on the test grid.
    """
    xs = default_test_grid() if test_grid is None else np.asarray(test_grid)
    gap = np.asarray(G(xs)) - np.asarray(H(xs))
    if np.any(gap < -1e-12):
        worst = float(xs[int(np.argmin(gap))])
        raise PreconditionError(f"G < H on the test grid (worst at x={worst:.6g})")
    x = np.asarray(x_samples, dtype=np.float64)
    return _right_inverse(np.asarray(G(x), dtype=np.float64), x, H)


class CouplingCheck(BaseModel):
    samples: int
    min_gap: float
    ks_statistic: float
    ks_critical: float
    p_value: float

    @property
    def passed(self) -> bool:
        return self.min_gap >= -1e-12 and self.ks_statistic < self.ks_critical


def monotone_coupling_check(
    x_samples: Sequence[float], G: CDF, H: CDF, level: float = 0.01
) -> CouplingCheck:
    """Y - X >= 0 and a Kolmogorov–Smirnov test of Y against H."""
    x = np.asarray(x_samples, dtype=np.float64)
    y = monotone_coupling(x, G, H)
    result = stats.kstest(y, H)
    return CouplingCheck(
        samples=x.size,
        min_gap=float(np.min(y - x)),
        ks_statistic=float(result.statistic),
        ks_critical=float(stats.kstwo.ppf(1.0 - level, x.size)),
        p_value=float(result.pvalue),
    )


# negative Gaussian moments


def _check_moment(s: float, variance: float) -> None:
    if not 0.0 < s < 1.0:
        raise DomainError(f"s must lie in (0, 1), got {s}")
    if not variance > 0.0:
        raise DomainError(f"variance must be positive, got {variance}")


def gauss_negative_moment(s: float, variance: float) -> float:
    """
    sup_{a>=0} E[(|X| - a)_+^{-s}] for X ~ N(0, variance), attained at a = 0:
    Γ((1-s)/2) / ((2·variance)^{s/2}·√π).

    Raises:
        DomainError: s outside (0, 1) or a non-positive variance.
    """
    _check_moment(s, variance)
    return float(special.gamma((1.0 - s) / 2.0)) / (
        (2.0 * variance) ** (s / 2.0) * math.sqrt(math.pi)
    )


def gauss_negative_moment_quadrature(
    s: float,
    variance: float,
    a: float = 0.0,
    quad: QuadratureConfig = DEFAULT_QUADRATURE,
) -> float:
    """
    E[(|X| - a)_+^{-s}], with |X| <= a contributing 0, by quadrature after the
    substitution x = u^{1/(1-s)} that removes the singularity at the origin.
    """
    _check_moment(s, variance)
    if a < 0.0:
        raise DomainError(f"shift a must be non-negative, got {a}")
    v = math.sqrt(variance)
    power = 1.0 / (1.0 - s)
    upper = (quad.cutoff * v) ** (1.0 - s)

    def integrand(u):
        x = u**power
        return np.exp(-((x + a) ** 2) / (2.0 * variance)) / (1.0 - s)

    value, _ = integrate.fixed_quad(integrand, 0.0, upper, n=quad.nodes)
    return float(value) / (v * math.sqrt(math.pi / 2.0))


def gauss_negative_moment_mc(
    s: float,
    variance: float,
    stream: NoiseStream,
    a: float = 0.0,
    samples: int = 1_000_000,
    chunk: int = 100_000,
) -> MonteCarloEstimate:
    """
    Sample mean of (|X| - a)_+^{-s}. Restricted to s < 1/2, where the
    estimator has finite variance.
    """
    _check_moment(s, variance)
    if s >= 0.5:
        raise DomainError(f"the Monte Carlo estimate needs s < 1/2, got {s}")
    sums, squares = [], []
    for size in _batched(samples, chunk):
        x = np.abs(stream.next_generator().standard_normal(size)) * math.sqrt(variance)
        excess = x - a
        values = np.zeros(size)
        positive = excess > 0.0
        values[positive] = excess[positive] ** (-s)
        sums.append(float(values.sum()))
        squares.append(float((values * values).sum()))
    mean = math.fsum(sums) / samples
    variance_hat = (math.fsum(squares) - samples * mean * mean) / (samples - 1)
    return MonteCarloEstimate(
        value=mean, stderr=math.sqrt(max(variance_hat, 0.0) / samples), samples=samples
    )


# tail of the stochastic convolution


class TailRow(BaseModel):
    rho: float
    exceedances: int
    probability: float


class ConvolutionTail(BaseModel):
    """
    P(sup |Z| > ρ) per ρ and the fitted slope of log P against ρ².
    `fitted_constant` is -slope·√T·λ²·Lip²·L², positive for Gaussian-type
    decay.
    """

    T: float
    lam: float
    lip: float
    level: float
    replicas: int
    sups: List[float]
    rows: List[TailRow]
    slope: Optional[float] = None
    fitted_constant: Optional[float] = None

    @property
    def decays(self) -> bool:
        return self.slope is not None and self.slope < 0.0


def clipped_integrand(lip: float, level: float) -> Callable[[np.ndarray], np.ndarray]:
    """z ↦ clip(Lip·(L + z), ±4·Lip·L)."""
    bound = 4.0 * lip * level
    return lambda z: np.clip(lip * (level + z), -bound, bound)


def convolution_sup(
    T: float,
    lam: float,
    integrand: Callable[[np.ndarray], np.ndarray],
    stream: NoiseStream,
    points: int = 64,
    steps: int = 200,
) -> float:
    """
    sup over the space-time grid of |Z| for Z = ∫∫ p_{t-s}(x, y) λσ(Z) W(ds dy),
    stepped with the exact heat semigroup on rfft modes.
    """
    dt = T / steps
    dx = 2.0 / points
    damping = semigroup_multiplier(points, dt)
    z = np.zeros(points)
    top = 0.0
    for _ in range(steps):
        xi = stream.next_generator().standard_normal(points)
        kicked = z + lam * integrand(z) * math.sqrt(dt / dx) * xi
        z = np.fft.irfft(np.fft.rfft(kicked) * damping, n=points)
        top = max(top, float(np.max(np.abs(z))))
    return top


def default_rho_grid(sups: Sequence[float]) -> List[float]:
    """Empirical quantiles 0.5, 0.7, 0.85 and 0.95 of the sups."""
    values = np.asarray(sups)
    if not np.any(values > 0.0):
        return [1.0]
    return [float(q) for q in np.quantile(values, [0.5, 0.7, 0.85, 0.95])]


def convolution_tail_check(
    T: float,
    lam: float,
    lip: float,
    level: float,
    rho_grid: Optional[Sequence[float]],
    replicas: int,
    seed: int = 0,
    points: int = 64,
    steps: int = 200,
    workers: Optional[int] = None,
) -> ConvolutionTail:
    """
    Monte Carlo tail of the sup-norm of the stochastic convolution with the
    integrand bounded by 4·Lip·L.

    The convolution is linear in (L, Z), so doubling L doubles every sup for
    the same seed.
    """
    if not (T > 0.0 and lip >= 0.0 and level > 0.0 and lam >= 0.0):
        raise DomainError("tail check needs T, L > 0 and λ, Lip >= 0")
    if replicas < 2:
        raise UsageError("tail check needs at least two replicas")
    integrand = clipped_integrand(lip, level)
    sups = map_replicas(
        lambda r: convolution_sup(T, lam, integrand, NoiseStream(seed, r), points, steps),
        range(replicas),
        workers,
    )
    rhos = default_rho_grid(sups) if rho_grid is None else [float(r) for r in rho_grid]
    values = np.asarray(sups)
    rows = []
    for rho in rhos:
        count = int(np.count_nonzero(values > rho))
        rows.append(TailRow(rho=rho, exceedances=count, probability=count / replicas))
    usable = [(r.rho, r.probability) for r in rows if 0.0 < r.probability < 1.0]
    slope = constant = None
    if len({rho for rho, _ in usable}) >= 2:
        rho, prob = zip(*usable)
        slope = linear_fit(np.square(rho), np.log(prob)).slope
        constant = -slope * math.sqrt(T) * (lam * lip * level) ** 2
    logger.debug("convolution tail: slope %s over %d usable rows", slope, len(usable))
    return ConvolutionTail(
        T=T,
        lam=lam,
        lip=lip,
        level=level,
        replicas=replicas,
        sups=list(sups),
        rows=rows,
        slope=slope,
        fitted_constant=constant,
    )
