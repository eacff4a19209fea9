# rdphase/dynamics/kernel.py

"""
The periodic heat kernel of ∂²ₓ on 𝕋 = [-1, 1).

Two representations are provided:

* the Gaussian image sum  (4πt)^(-1/2) Σ_k exp(-(x - y + 2k)² / 4t), accurate for
  small t;
* the theta series        ½ Σ_k exp(-π²k²t) cos(πk(x - y)), accurate for large t.

`heat_kernel` switches between them at `KernelEvalConfig.crossover_time`.
"""

import math
from typing import Iterable, List, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field as PydanticField
from scipy import integrate, special

from rdphase.core.exceptions import DomainError
from rdphase.core.field import Field

ArrayOrFloat = Union[float, np.ndarray]

# e^{-x} < 1e-18 beyond this exponent
_NEGLIGIBLE_EXPONENT = 41.5


class KernelEvalConfig(BaseModel):
    """Truncation settings for the two kernel representations."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    image_terms: int = PydanticField(default=10, ge=1)
    fourier_modes: int = PydanticField(default=128, ge=1)
    crossover_time: float = PydanticField(default=0.2, gt=0.0)


DEFAULT_KERNEL = KernelEvalConfig()


def _check_time(t: float) -> None:
    if not t > 0.0:
        raise DomainError(f"kernel time must be positive, got {t}")


def _reduced_difference(x: ArrayOrFloat, y: ArrayOrFloat) -> np.ndarray:
    """x - y mapped into [-1, 1)."""
    d = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return np.mod(d + 1.0, 2.0) - 1.0


def required_image_terms(t: float) -> int:
    return 3 + math.ceil(10.0 * math.sqrt(t))


def required_fourier_modes(t: float) -> int:
    return math.ceil(math.sqrt(_NEGLIGIBLE_EXPONENT / (math.pi**2 * t))) + 1


def _as_output(value: np.ndarray) -> ArrayOrFloat:
    return float(value) if np.ndim(value) == 0 else value


def kernel_image_sum(
    t: float, x: ArrayOrFloat, y: ArrayOrFloat, cfg: KernelEvalConfig = DEFAULT_KERNEL
) -> ArrayOrFloat:
    """
    Gaussian image-sum representation of p_t(x, y).

    The number of images is max(cfg.image_terms, 3 + ceil(10·√t)), which keeps the
    truncation error below machine epsilon.

    Raises:
        DomainError: If t <= 0.
    """
    _check_time(t)
    terms = max(cfg.image_terms, required_image_terms(t))
    d = _reduced_difference(x, y)
    shifts = 2.0 * np.arange(-terms, terms + 1)
    gauss = np.exp(-((d[..., None] + shifts) ** 2) / (4.0 * t))
    return _as_output(gauss.sum(axis=-1) / math.sqrt(4.0 * math.pi * t))


def kernel_fourier(
    t: float, x: ArrayOrFloat, y: ArrayOrFloat, cfg: KernelEvalConfig = DEFAULT_KERNEL
) -> ArrayOrFloat:
    """
    Theta-series representation ½ Σ_{|k|<=K} e^{-π²k²t} cos(πk(x - y)).

    Raises:
        DomainError: If t <= 0.
    """
    _check_time(t)
    modes = max(cfg.fourier_modes, required_fourier_modes(t))
    d = _reduced_difference(x, y)
    k = np.arange(1, modes + 1)
    weights = np.exp(-(math.pi**2) * k**2 * t)
    series = (weights * np.cos(math.pi * k * d[..., None])).sum(axis=-1)
    return _as_output(0.5 + series)


def heat_kernel(
    t: float, x: ArrayOrFloat, y: ArrayOrFloat, cfg: KernelEvalConfig = DEFAULT_KERNEL
) -> ArrayOrFloat:
    """p_t(x, y), using the image sum below the crossover time."""
    if t < cfg.crossover_time:
        return kernel_image_sum(t, x, y, cfg)
    return kernel_fourier(t, x, y, cfg)


def semigroup_multiplier(points: int, t: float) -> np.ndarray:
    """e^{-π²m²t} for the rfft modes m = 0..J/2 of a J-point grid."""
    m = np.arange(points // 2 + 1)
    return np.exp(-(math.pi**2) * m**2 * t)


def apply_semigroup(f: Field, t: float) -> Field:
    """
    (P_t f)(x) = ∫ p_t(x, y) f(y) dy, applied mode-wise on the grid transform.

    Raises:
        DomainError: If t < 0.
    """
    if t < 0.0:
        raise DomainError(f"semigroup time must be non-negative, got {t}")
    if t == 0.0:
        return f
    points = f.grid.points
    coefficients = np.fft.rfft(f.values) * semigroup_multiplier(points, t)
    return f.with_values(np.fft.irfft(coefficients, n=points))


def _torus_distance(x: float, z: float) -> float:
    return abs(float(_reduced_difference(x, z)))


def _wrapped_gaussian_mass(low: float, high: float, t: float) -> float:
    """Mass that the wrapped N(0, 2t) law gives the arc [low, high] (length < 2)."""
    scale = math.sqrt(2.0 * t)
    terms = required_image_terms(t) + 2
    shifts = 2.0 * np.arange(-terms, terms + 1)
    upper = special.ndtr((high + shifts) / scale)
    lower = special.ndtr((low + shifts) / scale)
    return float(np.sum(upper - lower))


def _l1_integrand(s: float, delta: float) -> float:
    # p_s(x,.) > p_s(z,.) exactly on the half torus closer to x
    if s <= 0.0:
        return 2.0
    near = _wrapped_gaussian_mass(-delta / 2.0, 1.0 - delta / 2.0, s)
    far = _wrapped_gaussian_mass(delta / 2.0, 1.0 + delta / 2.0, s)
    return 2.0 * (near - far)


def kernel_l1_difference(
    x: float, z: float, t_max: float, cfg: KernelEvalConfig = DEFAULT_KERNEL
) -> float:
    """
    ∫_0^{t_max} ∫_𝕋 |p_s(x, y) - p_s(z, y)| dy ds.

    The inner integral is evaluated exactly from the sign structure of the
    difference; the time integral uses adaptive quadrature.

    Raises:
        DomainError: If t_max <= 0.
    """
    if not t_max > 0.0:
        raise DomainError(f"t_max must be positive, got {t_max}")
    delta = _torus_distance(x, z)
    if delta == 0.0:
        return 0.0
    value, _ = integrate.quad(
        _l1_integrand, 0.0, t_max, args=(delta,), limit=200, epsabs=1e-12
    )
    return float(value)


def _l2_series(delta: float, t_max: float) -> float:
    theta = math.pi * delta
    # Σ_{k>=1} (1 - cos kθ)/k² = πθ/2 - θ²/4 on [0, 2π]
    full = math.pi * theta / 2.0 - theta**2 / 4.0
    modes = required_fourier_modes(2.0 * t_max)
    k = np.arange(1, modes + 1)
    damped = np.sum(
        np.exp(-2.0 * math.pi**2 * k**2 * t_max) * (1.0 - np.cos(k * theta)) / k**2
    )
    return float((full - damped) / math.pi**2)


def _l2_quadrature(delta: float, t_max: float, cfg: KernelEvalConfig) -> float:
    # s = u² removes the s^(-1/2) singularity at the origin
    def integrand(u: float) -> float:
        if u <= 0.0:
            return 2.0 / math.sqrt(2.0 * math.pi)
        s = u * u
        gap = heat_kernel(2.0 * s, 0.0, 0.0, cfg) - heat_kernel(
            2.0 * s, 0.0, delta, cfg
        )
        return 4.0 * u * gap

    value, _ = integrate.quad(
        integrand, 0.0, math.sqrt(t_max), limit=400, epsabs=1e-13, epsrel=1e-12
    )
    return float(value)


def kernel_l2_difference(
    x: float,
    z: float,
    t_max: float,
    cfg: KernelEvalConfig = DEFAULT_KERNEL,
    method: str = "series",
) -> float:
    """
    ∫_0^{t_max} ∫_𝕋 |p_s(x, y) - p_s(z, y)|² dy ds.

    Args:
        method: "series" sums Σ_k e^{-2π²k²s}(1 - cos(πk(x - z))) integrated in
            closed form; "quadrature" integrates 2[p_{2s}(x,x) - p_{2s}(x,z)] in s.

    Raises:
        DomainError: If t_max <= 0 or the method is unknown.
    """
    if not t_max > 0.0:
        raise DomainError(f"t_max must be positive, got {t_max}")
    delta = _torus_distance(x, z)
    if delta == 0.0:
        return 0.0
    if method == "series":
        return _l2_series(delta, t_max)
    if method == "quadrature":
        return _l2_quadrature(delta, t_max, cfg)
    raise DomainError(f"unknown method '{method}'")


def _peaks(*centres: float) -> List[float]:
    """Interior break points for quadrature over [-1, 1] at the kernel peaks."""
    reduced = {float(_reduced_difference(c, 0.0)) for c in centres}
    return sorted(p for p in reduced if -1.0 < p < 1.0)


def chapman_kolmogorov_residual(
    t: float, s: float, x: float, z: float, cfg: KernelEvalConfig = DEFAULT_KERNEL
) -> float:
    """|∫ p_t(x, y) p_s(y, z) dy - p_{t+s}(x, z)| by adaptive quadrature in y."""
    _check_time(t)
    _check_time(s)

    def integrand(y: float) -> float:
        return heat_kernel(t, x, y, cfg) * heat_kernel(s, y, z, cfg)

    value, _ = integrate.quad(
        integrand,
        -1.0,
        1.0,
        points=_peaks(x, z) or None,
        limit=400,
        epsabs=1e-13,
        epsrel=1e-12,
    )
    return abs(value - heat_kernel(t + s, x, z, cfg))


def total_mass(t: float, x: float, cfg: KernelEvalConfig = DEFAULT_KERNEL) -> float:
    """∫_𝕋 p_t(x, y) dy by quadrature; equals 1 for every t > 0."""
    _check_time(t)
    value, _ = integrate.quad(
        lambda y: heat_kernel(t, x, y, cfg),
        -1.0,
        1.0,
        points=_peaks(x) or None,
        limit=400,
        epsabs=1e-13,
        epsrel=1e-12,
    )
    return float(value)


def cross_representation_errors(
    times: Iterable[float],
    separations: Iterable[float],
    cfg: KernelEvalConfig = DEFAULT_KERNEL,
) -> List[dict]:
    """Rows of |image sum - theta series| over a (t, x - z) lattice."""
    rows = []
    separations = list(separations)
    for t in times:
        for sep in separations:
            image = kernel_image_sum(t, sep, 0.0, cfg)
            fourier = kernel_fourier(t, sep, 0.0, cfg)
            rows.append(
                {
                    "t": float(t),
                    "separation": float(sep),
                    "image_sum": image,
                    "fourier": fourier,
                    "abs_error": abs(image - fourier),
                }
            )
    return rows
