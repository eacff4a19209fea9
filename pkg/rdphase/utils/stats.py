# rdphase/utils/stats.py

"""
Order-fixed reductions and small statistical helpers.

Ensemble statistics are always reduced with `pairwise_sum`, whose binary tree
depends only on the number of inputs, so results are identical no matter how
many worker threads produced them.
"""

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np
from scipy import stats

from rdphase.core.exceptions import UsageError


def pairwise_sum(values: Iterable):
    """Sums scalars or equally-shaped arrays along a fixed binary tree."""
    items = list(values)
    if not items:
        return 0.0
    while len(items) > 1:
        paired = [items[i] + items[i + 1] for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            paired.append(items[-1])
        items = paired
    return items[0]


def tree_mean(values: Sequence) -> float:
    if len(values) == 0:
        raise UsageError("mean of an empty sample")
    return pairwise_sum(values) / len(values)


def mean_and_stderr(values: Sequence[float]) -> Tuple[float, float]:
    """Sample mean and its standard error, both tree-reduced."""
    n = len(values)
    mean = tree_mean(values)
    if n < 2:
        return float(mean), float("nan")
    squares = pairwise_sum([(float(v) - mean) ** 2 for v in values])
    return float(mean), math.sqrt(squares / (n - 1) / n)


class RunningMoments:
    """
    Welford's streaming mean and variance.

    Example:
        moments = RunningMoments()
        for value in series:
            moments.update(value)
        moments.mean, moments.variance
    """

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self._m2 = 0.0

    def update(self, value: float) -> None:
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (value - self.mean)

    @property
    def variance(self) -> float:
        if self.count < 2:
            return 0.0
        return self._m2 / (self.count - 1)

    @property
    def stderr(self) -> float:
        if self.count < 2:
            return float("nan")
        return math.sqrt(self.variance / self.count)


def wilson_interval(
    successes: int, trials: int, confidence: float = 0.95
) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise UsageError("binomial interval needs at least one trial")
    ci = stats.binomtest(successes, trials).proportion_ci(
        confidence_level=confidence, method="wilson"
    )
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class LineFit:
    """Least-squares line with a two-sided confidence interval on the slope."""

    slope: float
    intercept: float
    slope_stderr: float
    ci_low: float
    ci_high: float
    points: int


def linear_fit(x: Sequence[float], y: Sequence[float], confidence: float = 0.95):
    """
    Fits y = intercept + slope * x with `scipy.stats.linregress`.

    With fewer than three points the slope interval is undefined and reported
    as NaN.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.size < 2:
        raise UsageError("linear fit needs two or more paired points")
    if np.ptp(x) == 0.0:
        raise UsageError("linear fit needs at least two distinct abscissae")
    result = stats.linregress(x, y)
    if x.size < 3:
        low = high = float("nan")
        stderr = float("nan")
    else:
        stderr = float(result.stderr)
        half = stats.t.ppf(0.5 + confidence / 2.0, x.size - 2) * stderr
        low, high = float(result.slope - half), float(result.slope + half)
    return LineFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        slope_stderr=stderr,
        ci_low=low,
        ci_high=high,
        points=int(x.size),
    )
