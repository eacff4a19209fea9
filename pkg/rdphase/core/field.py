# rdphase/core/field.py

"""
The periodic grid on 𝕋 = [-1, 1) and the scalar observables of a spatial profile.

All observables accept either a `Field` or a raw one-dimensional array; they are
pure functions and safe to share across threads.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np

from rdphase.core.exceptions import DomainError, UsageError

TORUS_LENGTH = 2.0


@dataclass(frozen=True)
class TorusGrid:
    """
    A uniform periodic grid of `points` cells covering the torus [-1, 1).

    Example:
        grid = TorusGrid(256)
        grid.spacing       # 2 / 256
        grid.coordinates   # -1, -1 + dx, ..., 1 - dx
    """

    points: int

    def __post_init__(self):
        if not isinstance(self.points, (int, np.integer)) or isinstance(
            self.points, bool
        ):
            raise UsageError(f"grid size must be an integer, got {self.points!r}")
        if self.points < 4 or self.points % 2 != 0:
            raise UsageError(
                f"grid size must be even and at least 4, got {self.points}"
            )

    @property
    def spacing(self) -> float:
        return TORUS_LENGTH / self.points

    @property
    def coordinates(self) -> np.ndarray:
        return -1.0 + np.arange(self.points) * self.spacing

    def wrap(self, index: int) -> int:
        """Maps any integer index onto 0..J-1."""
        return index % self.points

    def coarsen(self) -> "TorusGrid":
        """Returns the grid with every second point removed."""
        return TorusGrid(self.points // 2)


@dataclass(frozen=True)
class Field:
    """
    A spatial profile on a `TorusGrid`. Values are stored read-only.
    """

    grid: TorusGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1 or values.shape[0] != self.grid.points:
            raise UsageError(
                f"field needs {self.grid.points} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: TorusGrid, level: float) -> "Field":
        return cls(grid, np.full(grid.points, float(level)))

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "Field":
        return cls.constant(grid, 0.0)

    @classmethod
    def ones(cls, grid: TorusGrid) -> "Field":
        return cls.constant(grid, 1.0)

    @classmethod
    def from_function(
        cls, grid: TorusGrid, fn: Callable[[np.ndarray], np.ndarray]
    ) -> "Field":
        return cls(grid, fn(grid.coordinates))

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)

    def restrict(self) -> "Field":
        """Samples the field on the coarsened grid (even-indexed points)."""
        return Field(self.grid.coarsen(), self.values[::2])

    def __len__(self) -> int:
        return self.grid.points


FieldLike = Union[Field, np.ndarray, Sequence[float]]


def _values(f: FieldLike) -> np.ndarray:
    values = f.values if isinstance(f, Field) else np.asarray(f, dtype=np.float64)
    if values.size == 0:
        raise UsageError("observable of an empty field")
    return values


def _spacing(f: FieldLike) -> float:
    if isinstance(f, Field):
        return f.grid.spacing
    return TORUS_LENGTH / len(_values(f))


def _same_grid(f: FieldLike, g: FieldLike) -> None:
    if isinstance(f, Field) and isinstance(g, Field):
        if f.grid != g.grid:
            raise UsageError(
                f"grid mismatch: {f.grid.points} vs {g.grid.points} points"
            )
    elif len(_values(f)) != len(_values(g)):
        raise UsageError("grid mismatch between fields")


def infimum(f: FieldLike) -> float:
    """L_t: the minimum of the profile over the torus."""
    return float(np.min(_values(f)))


def supremum(f: FieldLike) -> float:
    """U_t: the maximum of the profile; the sup-norm for nonnegative fields."""
    return float(np.max(_values(f)))


def haar_integral(f: FieldLike) -> float:
    """Left-endpoint quadrature of f against Haar measure of total mass 2."""
    return float(_spacing(f) * np.sum(_values(f)))


def spatial_mean(f: FieldLike) -> float:
    return haar_integral(f) / TORUS_LENGTH


def l1_distance(f: FieldLike, g: FieldLike) -> float:
    _same_grid(f, g)
    return float(_spacing(f) * np.sum(np.abs(_values(f) - _values(g))))


def sup_distance(f: FieldLike, g: FieldLike) -> float:
    _same_grid(f, g)
    return float(np.max(np.abs(_values(f) - _values(g))))


def holder_seminorm(f: FieldLike, alpha: float, lags: Sequence[int]) -> float:
    """
    Discrete C^alpha seminorm estimated over a set of index lags.

    Every pair (i, i+h mod J) is considered, including the pairs that cross the
    wrap point, and the distance used is the periodic one, min(h*dx, 2 - h*dx).
    A profile such as f(x) = x, which is discontinuous on the torus, is therefore
    dominated by its jump at x = ±1.

    Args:
        f: The profile.
        alpha: Hölder index in (0, 1].
        lags: Positive index lags, each at most J/2.

    Raises:
        UsageError: If `lags` is empty or holds a lag outside 1..J/2.
        DomainError: If `alpha` is outside (0, 1].
    """
    values = _values(f)
    points = len(values)
    if not lags:
        raise UsageError("holder_seminorm needs at least one lag")
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"Hölder index must lie in (0, 1], got {alpha}")
    dx = _spacing(f)
    best = 0.0
    for lag in lags:
        if lag < 1 or lag > points // 2:
            raise UsageError(f"lag {lag} outside 1..{points // 2}")
        distance = min(lag * dx, TORUS_LENGTH - lag * dx)
        increments = np.abs(np.roll(values, -lag) - values)
        best = max(best, float(np.max(increments)) / distance**alpha)
    return best


def dyadic_lags(points: int) -> List[int]:
    """Index lags 1, 2, 4, ... up to J/8."""
    lags = [1]
    while lags[-1] * 2 <= points // 8:
        lags.append(lags[-1] * 2)
    return lags


def temporal_increment_stat(
    series: Sequence[Tuple[float, FieldLike]], theta: float
) -> float:
    """
    max over snapshot pairs of ||f(t+s) - f(t)||_C / s^theta.

    Raises:
        UsageError: Fewer than two snapshots, or times not strictly increasing.
        DomainError: theta outside (0, 1/4).
    """
    if len(series) < 2:
        raise UsageError("temporal_increment_stat needs at least two snapshots")
    if not 0.0 < theta < 0.25:
        raise DomainError(f"theta must lie in (0, 1/4), got {theta}")
    times = [float(t) for t, _ in series]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise UsageError("snapshot times must be strictly increasing")
    best = 0.0
    for (t0, f0), (t1, f1) in combinations(series, 2):
        best = max(best, sup_distance(f1, f0) / (t1 - t0) ** theta)
    return best


def field_to_row(t: float, f: FieldLike) -> List[str]:
    """Renders `t,x_0,...,x_{J-1}` with 17 significant digits."""
    return [format(float(t), ".17g")] + [format(v, ".17g") for v in _values(f)]


def field_from_row(row: Sequence[str], grid: TorusGrid) -> Tuple[float, Field]:
    if len(row) != grid.points + 1:
        raise UsageError(
            f"snapshot row has {len(row) - 1} values for a {grid.points}-point grid"
        )
    return float(row[0]), Field(grid, np.array([float(v) for v in row[1:]]))
