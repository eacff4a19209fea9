# rdphase/dynamics/reaction.py

"""
Reaction terms V(x) = x - F(x), noise coefficients σ, and the constants derived
from them (hypothesis checks, the moment constants γ and R(k), the level M).
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel
from scipy import optimize

from rdphase.core.exceptions import ConfigurationError, DomainError
from rdphase.utils.logging import get_logger

logger = get_logger(__name__)

LEVEL_FLOOR = -60


class PotentialFamily(str, Enum):
    POWER = "power"  # F(x) = c * x^(1+nu)
    TABULATED = "tabulated"  # F linearly interpolated from a table


@dataclass(frozen=True)
class PotentialSpec:
    """
    The nonlinearity F and its potential V(x) = x - F(x).

    Use the constructors rather than the raw dataclass:

    Example:
        kpp = PotentialSpec.kpp()                 # F(x) = x²
        allen_cahn = PotentialSpec.allen_cahn()   # F(x) = x³
        custom = PotentialSpec.tabulated(xs, fs)
    """

    family: PotentialFamily
    nu: float = 1.0
    coefficient: float = 1.0
    m0: float = 2.0
    drift_enabled: bool = True
    table_x: Optional[np.ndarray] = field(default=None, repr=False)
    table_f: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.family == PotentialFamily.POWER:
            if not self.nu > 0.0:
                raise ConfigurationError(f"power exponent nu must be > 0, got {self.nu}")
            if not self.coefficient > 0.0:
                raise ConfigurationError("power coefficient must be positive")
        else:
            if self.table_x is None or self.table_f is None:
                raise ConfigurationError("a tabulated potential needs a table")
            xs = np.asarray(self.table_x, dtype=np.float64)
            fs = np.asarray(self.table_f, dtype=np.float64)
            if xs.shape != fs.shape or xs.size < 2 or np.any(np.diff(xs) <= 0):
                raise ConfigurationError(
                    "table abscissae must be increasing and match the values"
                )
            object.__setattr__(self, "table_x", xs)
            object.__setattr__(self, "table_f", fs)
        if not self.m0 > 1.0:
            raise ConfigurationError(f"m0 must exceed 1, got {self.m0}")

    @classmethod
    def power(
        cls, nu: float, coefficient: float = 1.0, drift_enabled: bool = True
    ) -> "PotentialSpec":
        return cls(
            family=PotentialFamily.POWER,
            nu=float(nu),
            coefficient=float(coefficient),
            m0=1.0 + float(nu),
            drift_enabled=drift_enabled,
        )

    @classmethod
    def kpp(cls, drift_enabled: bool = True) -> "PotentialSpec":
        return cls.power(1.0, drift_enabled=drift_enabled)

    @classmethod
    def allen_cahn(cls, drift_enabled: bool = True) -> "PotentialSpec":
        return cls.power(2.0, drift_enabled=drift_enabled)

    @classmethod
    def tabulated(cls, xs, fs, m0: float = 2.0) -> "PotentialSpec":
        return cls(family=PotentialFamily.TABULATED, table_x=xs, table_f=fs, m0=m0)

    @property
    def name(self) -> str:
        if self.family == PotentialFamily.TABULATED:
            return "tabulated"
        return f"power(nu={self.nu:g}, c={self.coefficient:g})"

    def F(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.family == PotentialFamily.POWER:
            exponent = 1.0 + self.nu
            if np.any(x < 0.0) and not float(exponent).is_integer():
                raise DomainError(
                    f"F(x) = x^{exponent:g} is undefined for negative x"
                )
            value = self.coefficient * np.power(x, exponent)
        else:
            xs, fs = self.table_x, self.table_f
            value = np.interp(x, xs, fs)
            low_slope = (fs[1] - fs[0]) / (xs[1] - xs[0])
            high_slope = (fs[-1] - fs[-2]) / (xs[-1] - xs[-2])
            value = np.where(x < xs[0], fs[0] + low_slope * (x - xs[0]), value)
            value = np.where(x > xs[-1], fs[-1] + high_slope * (x - xs[-1]), value)
        return float(value) if value.ndim == 0 else value


def eval_V(spec: PotentialSpec, x):
    """
    V(x) = x - F(x).

    Raises:
        DomainError: For negative x when the power exponent is not an integer.
    """
    x = np.asarray(x, dtype=np.float64)
    value = x - spec.F(x)
    return float(value) if np.ndim(value) == 0 else value


def eval_V_truncated(spec: PotentialSpec, N: int, w):
    """V_N(w): 0 for w <= 0, V(w) on (0, N), V(N) from N on."""
    if N < 1:
        raise DomainError(f"truncation level must be a positive integer, got {N}")
    w = np.asarray(w, dtype=np.float64)
    inside = np.asarray(eval_V(spec, np.clip(w, 0.0, float(N))))
    value = np.where(w <= 0.0, 0.0, inside)
    return float(value) if value.ndim == 0 else value


def reaction_drift(
    spec: PotentialSpec, u: np.ndarray, truncation: Optional[int] = None
) -> np.ndarray:
    """
    The drift applied by the solver.

    Negative arguments contribute 0, the V_N convention for w <= 0, so the raw
    potential is never evaluated off its domain.
    """
    if not spec.drift_enabled:
        return np.zeros_like(u)
    if truncation is not None:
        return np.asarray(eval_V_truncated(spec, truncation, u))
    positive = np.maximum(u, 0.0)
    return np.where(u > 0.0, np.asarray(eval_V(spec, positive)), 0.0)


class HypothesisReport(BaseModel):
    """Outcome of the finite-grid hypothesis checks on a potential."""

    f_vanishes_at_zero: bool
    f_nondecreasing: bool
    sublinear_near_zero: bool
    ratio_increasing: bool
    v_bounded_above: bool
    slope_near_zero: float
    v_max: float

    @property
    def passed(self) -> bool:
        return not self.failures()

    def failures(self) -> List[str]:
        messages = {
            "f_vanishes_at_zero": "F(0) != 0",
            "f_nondecreasing": "F' < 0 somewhere on the test grid",
            "sublinear_near_zero": "F(x)/x >= 1 near 0",
            "ratio_increasing": "F(x)/x is not increasing for large x",
            "v_bounded_above": "sup V is not attained inside the test grid",
        }
        return [text for flag, text in messages.items() if not getattr(self, flag)]


def default_test_grid() -> np.ndarray:
    return np.geomspace(1e-6, 50.0, 4001)


def check_hypotheses(
    spec: PotentialSpec, test_grid: Optional[np.ndarray] = None
) -> HypothesisReport:
    """
    Checks the structural hypotheses on F over a finite test grid in (0, x_max].

    The report is informational; nothing is raised for a failing potential.
    """
    x = np.asarray(default_test_grid() if test_grid is None else test_grid)
    x = x[x > 0.0]
    f = np.asarray(spec.F(x))
    ratio = f / x
    v = x - f
    head = max(2, x.size // 20)
    tail = ratio[x.size // 2 :]
    argmax = int(np.argmax(v))
    report = HypothesisReport(
        f_vanishes_at_zero=abs(float(spec.F(0.0))) <= 1e-14,
        f_nondecreasing=bool(np.all(np.diff(f) >= -1e-12)),
        sublinear_near_zero=bool(np.all(ratio[:head] < 1.0)),
        ratio_increasing=bool(
            np.all(np.diff(tail) >= -1e-12) and tail[-1] > tail[0] * (1.0 + 1e-9)
        ),
        v_bounded_above=argmax < x.size - 1,
        slope_near_zero=float(ratio[0]),
        v_max=float(v[argmax]),
    )
    logger.debug("hypotheses for %s: %s", spec.name, report.failures() or "all pass")
    return report


def gamma_constant(lip_sigma: float) -> float:
    """γ = (64 Lip²)² ∨ ¼."""
    if lip_sigma < 0.0:
        raise DomainError(f"Lipschitz constant must be >= 0, got {lip_sigma}")
    return max((64.0 * lip_sigma**2) ** 2, 0.25)


def _check_moment_args(k: float, gamma: float) -> None:
    if k < 2.0:
        raise DomainError(f"moment order must be >= 2, got {k}")
    if not gamma > 0.0:
        raise DomainError(f"gamma must be positive, got {gamma}")


def moment_bound_R_numeric(
    spec: PotentialSpec,
    k: float,
    gamma: float,
    y_max: Optional[float] = None,
    points: int = 20001,
) -> float:
    """sup_{y>=0} (V(y) + γk²y)/(1 + γk²) by grid search refined with Brent."""
    _check_moment_args(k, gamma)
    scale = 1.0 + gamma * k**2

    def objective(y):
        y = np.asarray(y, dtype=np.float64)
        return (np.asarray(eval_V(spec, y)) + gamma * k**2 * y) / scale

    if y_max is None:
        y_max = 1.0
        while float(objective(y_max)) > float(objective(y_max / 2.0)):
            y_max *= 2.0
            if y_max > 2.0**60:
                raise DomainError("R(k) is unbounded for this potential")
    grid = np.linspace(0.0, y_max, points)
    values = objective(grid)
    best = int(np.argmax(values))
    low = grid[max(best - 1, 0)]
    high = grid[min(best + 1, points - 1)]
    refined = optimize.minimize_scalar(
        lambda y: -float(objective(y)),
        bounds=(low, high),
        method="bounded",
        options={"xatol": 1e-13 * max(1.0, high)},
    )
    return max(float(values[best]), -float(refined.fun))


def moment_bound_R(spec: PotentialSpec, k: float, gamma: float) -> float:
    """
    R(k) = sup_{y>=0} (V(y) + γk²y)/(1 + γk²).

    For the power family F = c·y^(1+ν) the supremum is
    ν/(1+ν) · (a / (c(1+ν)))^(1/ν) with a = 1 + γk²; for c = 1 this is
    ν·a^(1/ν)/(1+ν)^((1+ν)/ν).  Other families use the numeric maximiser.
    """
    _check_moment_args(k, gamma)
    if spec.family != PotentialFamily.POWER:
        return moment_bound_R_numeric(spec, k, gamma)
    a = 1.0 + gamma * k**2
    nu, c = spec.nu, spec.coefficient
    return nu / (1.0 + nu) * (a / (c * (1.0 + nu))) ** (1.0 / nu)


def moment_bound(
    spec: PotentialSpec, k: float, gamma: float, psi0_sup: float
) -> float:
    """The k-th moment bound [2‖ψ₀‖ + 4R(k)]^k."""
    return (2.0 * psi0_sup + 4.0 * moment_bound_R(spec, k, gamma)) ** k


def level_threshold(spec: PotentialSpec) -> float:
    """The first v* > 0 with F(v*) = v*/2 (infinite if F stays below v/2)."""
    if spec.family == PotentialFamily.POWER:
        return (1.0 / (2.0 * spec.coefficient)) ** (1.0 / spec.nu)
    levels = np.geomspace(2.0**LEVEL_FLOOR, 2.0**20, 4097)
    excess = np.asarray(spec.F(levels)) - levels / 2.0
    above = np.nonzero(excess > 0.0)[0]
    if above.size == 0:
        return math.inf
    first = int(above[0])
    if first == 0:
        return 0.0
    return float(
        optimize.brentq(
            lambda v: float(spec.F(v)) - v / 2.0,
            levels[first - 1],
            levels[first],
            xtol=1e-300,
            rtol=4e-16,
        )
    )


def compute_level_M(spec: PotentialSpec) -> int:
    """
    The largest negative integer M with ½v <= V(v) <= v on (0, 2^(M+1)].

    Raises:
        ConfigurationError: If F is negative near 0 or no such M exists above -60.
    """
    threshold = level_threshold(spec)
    level = -1
    while 2.0 ** (level + 1) > threshold * (1.0 + 1e-12):
        level -= 1
        if level < LEVEL_FLOOR:
            raise ConfigurationError(
                f"no level M >= {LEVEL_FLOOR} with v/2 <= V(v) <= v near 0"
            )
    levels = np.geomspace(2.0**LEVEL_FLOOR, 2.0 ** (level + 1), 2049)
    if np.any(np.asarray(spec.F(levels)) < -1e-15):
        raise ConfigurationError("V(v) exceeds v below the level threshold")
    return level


class SigmaKind(str, Enum):
    LINEAR = "linear"
    CUSTOM = "custom"


_SIGMA_LATTICE = np.linspace(-4.0, 4.0, 801)


@dataclass(frozen=True)
class DiffusionSpec:
    """
    A noise coefficient σ with σ(0) = 0 and L|a| <= |σ(a)| <= Lip|a|.

    The sector bounds are verified on a sampling lattice at construction.
    """

    sigma: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    lip: float
    lower: float = 0.0
    kind: SigmaKind = SigmaKind.CUSTOM
    name: str = "custom"

    def __post_init__(self):
        if self.lip < 0.0 or self.lower < 0.0:
            raise ConfigurationError("sigma bounds must be non-negative")
        if self.lower > self.lip:
            raise ConfigurationError(
                f"sigma lower bound {self.lower} exceeds Lipschitz bound {self.lip}"
            )
        if float(np.asarray(self.sigma(np.zeros(1)))[0]) != 0.0:
            raise ConfigurationError("sigma(0) must be 0")
        values = np.abs(np.asarray(self.sigma(_SIGMA_LATTICE), dtype=np.float64))
        span = np.abs(_SIGMA_LATTICE)
        if np.any(values > self.lip * span * (1.0 + 1e-12) + 1e-15):
            raise ConfigurationError(f"|sigma(a)| exceeds {self.lip}|a| for '{self.name}'")
        if self.lower > 0.0 and np.any(values < self.lower * span * (1.0 - 1e-12)):
            raise ConfigurationError(f"|sigma(a)| falls below {self.lower}|a|")

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return self.sigma(u)

    @classmethod
    def linear(cls, c: float = 1.0) -> "DiffusionSpec":
        c = float(c)
        return cls(
            sigma=lambda u: c * u,
            lip=abs(c),
            lower=abs(c),
            kind=SigmaKind.LINEAR,
            name=f"linear({c:g})",
        )

    @classmethod
    def saturating(cls, c: float = 1.0) -> "DiffusionSpec":
        c = float(c)
        return cls(
            sigma=lambda u: c * u / (1.0 + np.abs(u)),
            lip=abs(c),
            name=f"saturating({c:g})",
        )

    @classmethod
    def sine(cls, c: float = 1.0) -> "DiffusionSpec":
        c = float(c)
        return cls(sigma=lambda u: c * np.sin(u), lip=abs(c), name=f"sine({c:g})")

    @classmethod
    def named(cls, name: str, c: float = 1.0) -> "DiffusionSpec":
        builders = {"linear": cls.linear, "saturating": cls.saturating, "sine": cls.sine}
        if name not in builders:
            raise ConfigurationError(
                f"unknown sigma '{name}', expected one of {sorted(builders)}"
            )
        return builders[name](c)

    def clipped(self, bound: float) -> "DiffusionSpec":
        """σ truncated to [-bound, bound]; the lower sector bound is dropped."""
        if bound < 0.0:
            raise DomainError("clip bound must be non-negative")
        sigma = self.sigma
        return DiffusionSpec(
            sigma=lambda u: np.clip(sigma(u), -bound, bound),
            lip=self.lip,
            name=f"{self.name}|clip({bound:g})",
        )


def rescale(
    potential: PotentialSpec, diffusion: DiffusionSpec, a: float
) -> Tuple[PotentialSpec, DiffusionSpec]:
    """
    The pair (a⁻¹F(a·), a⁻¹σ(a·)) describing ψ/a when ψ solves the original
    equation.
    """
    if not a > 0.0:
        raise DomainError(f"rescaling factor must be positive, got {a}")
    if potential.family == PotentialFamily.POWER:
        scaled_potential = PotentialSpec.power(
            potential.nu,
            coefficient=potential.coefficient * a**potential.nu,
            drift_enabled=potential.drift_enabled,
        )
    else:
        scaled_potential = PotentialSpec.tabulated(
            potential.table_x / a, potential.table_f / a, m0=potential.m0
        )
    if diffusion.kind == SigmaKind.LINEAR:
        return scaled_potential, diffusion
    sigma = diffusion.sigma
    scaled_diffusion = DiffusionSpec(
        sigma=lambda u: sigma(a * u) / a,
        lip=diffusion.lip,
        lower=diffusion.lower,
        name=f"{diffusion.name}|scale({a:g})",
    )
    return scaled_potential, scaled_diffusion
