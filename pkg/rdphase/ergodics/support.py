# rdphase/ergodics/support.py

"""
Fine-scale structure of typical profiles: the √(r log(1/r)) moduli of
continuity and the dimension of the image of a Cantor set.
"""

import math
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from rdphase.core.exceptions import DomainError, UsageError
from rdphase.core.field import Field, TorusGrid
from rdphase.dynamics.reaction import DiffusionSpec
from rdphase.utils.stats import LineFit, linear_fit

MIN_MODULUS_POINTS = 4096
MAX_RADIUS = 0.1


class ModulusEstimate(BaseModel):
    """
    Both statistics are divided by `normalizer` = λ·sup|σ(ω)|, so a typical
    profile of the stationary law gives values near 1.
    """

    limsup_stat: float
    liminf_stat: float
    normalizer: float
    radii: List[float]


def default_radii(grid: TorusGrid) -> List[float]:
    """Dyadic radii 2^{-j} inside [4·dx, 0.1]."""
    radii = []
    r = 2.0 ** math.floor(math.log2(MAX_RADIUS))
    while r >= 4.0 * grid.spacing:
        radii.append(r)
        r /= 2.0
    return radii


def modulus_estimator(
    snapshot: Field,
    diffusion: DiffusionSpec,
    lam: float,
    r_grid: Optional[Sequence[float]] = None,
) -> ModulusEstimate:
    """
    limsup statistic: max over r of sup_x sup_{0<h<=r} |ω(x+h) - ω(x)| / √(r log(1/r)).
    liminf statistic: min over r of √(16 log(1/r)/(π²r)) · inf_x sup_{0<h<=r} |ω(x+h) - ω(x)|.

    Raises:
        UsageError: J < 4096, or a radius outside [4·dx, 0.1].
        DomainError: If λ·sup|σ(ω)| is zero.
    """
    grid = snapshot.grid
    if grid.points < MIN_MODULUS_POINTS:
        raise UsageError(
            f"modulus_estimator needs J >= {MIN_MODULUS_POINTS}, got {grid.points}"
        )
    dx = grid.spacing
    radii = sorted(default_radii(grid) if r_grid is None else r_grid, reverse=True)
    if not radii:
        raise UsageError("radius grid is empty")
    for r in radii:
        if r < 4.0 * dx * (1 - 1e-12) or r > MAX_RADIUS:
            raise UsageError(f"radius {r} outside [{4 * dx:.3g}, {MAX_RADIUS}]")
    values = snapshot.values
    normalizer = lam * float(np.max(np.abs(diffusion(values))))
    if normalizer <= 0.0:
        raise DomainError("λ·sup|σ(ω)| vanishes; the statistics cannot be normalised")

    cutoffs = {int(math.floor(r / dx + 1e-9)): r for r in radii}
    running = np.zeros_like(values)
    widest = 0.0
    upper, lower = -math.inf, math.inf
    for h in range(1, max(cutoffs) + 1):
        np.maximum(running, np.abs(np.roll(values, -h) - values), out=running)
        widest = max(widest, float(running.max()))
        if h in cutoffs:
            r = cutoffs[h]
            log_term = math.log(1.0 / r)
            upper = max(upper, widest / math.sqrt(r * log_term))
            scale = math.sqrt(16.0 * log_term / (math.pi**2 * r))
            lower = min(lower, scale * float(running.min()))
    return ModulusEstimate(
        limsup_stat=upper / normalizer,
        liminf_stat=lower / normalizer,
        normalizer=normalizer,
        radii=radii,
    )


class CantorSet:
    """
    The middle-thirds Cantor set of a given depth, scaled onto [-1, 1].

    Example:
        cantor = CantorSet(depth=8)
        cantor.intervals          # 2^8 closed intervals of length 2·3^-8
        cantor.indices(grid)      # grid points realising the set
    """

    def __init__(self, depth: int = 8):
        if depth < 1:
            raise UsageError("Cantor depth must be >= 1")
        self.depth = depth
        left = np.zeros(1)
        width = 1.0
        for _ in range(depth):
            width /= 3.0
            left = np.concatenate((left, left + 2.0 * width))
        self._left = np.sort(-1.0 + 2.0 * left)
        self.width = 2.0 * width

    @property
    def dimension(self) -> float:
        return math.log(2.0) / math.log(3.0)

    @property
    def intervals(self) -> np.ndarray:
        return np.column_stack((self._left, self._left + self.width))

    def indices(self, grid: TorusGrid) -> np.ndarray:
        """Grid points inside the kept intervals, plus the nearest point to each."""
        coords = grid.coordinates
        dx = grid.spacing
        first = np.ceil((self._left + 1.0) / dx - 1e-9).astype(np.int64)
        last = np.floor((self._left + self.width + 1.0) / dx + 1e-9).astype(np.int64)
        centre = np.rint((self._left + self.width / 2.0 + 1.0) / dx).astype(np.int64)
        chosen = [np.arange(a, b + 1) for a, b in zip(first, last)]
        chosen.append(centre)
        picked = np.unique(np.concatenate(chosen))
        return picked[(picked >= 0) & (picked < coords.size)]


class DimensionEstimate(BaseModel):
    dimension: float
    scales: List[float]
    counts: List[int]
    fit: Optional[LineFit] = None


def box_counts(values: np.ndarray, box_sizes: Sequence[float]) -> List[int]:
    low = float(values.min())
    return [
        int(np.unique(np.floor((values - low) / d + 1e-9)).size) for d in box_sizes
    ]


def dimension_doubling(
    snapshot: Field, cantor: CantorSet, box_grid: Optional[Sequence[float]] = None
) -> DimensionEstimate:
    """
    Box-counting dimension of {ω(x) : x ∈ G}: the least-squares slope of
    log N(δ) against log(1/δ).

    The default box sizes are range·2^{-j}, j = 2..7. A constant profile has
    dimension 0.

    Raises:
        UsageError: Fewer than three box sizes.
    """
    image = snapshot.values[cantor.indices(snapshot.grid)]
    spread = float(np.ptp(image))
    if box_grid is None:
        if spread == 0.0:
            return DimensionEstimate(dimension=0.0, scales=[], counts=[1])
        box_grid = [spread * 2.0**-j for j in range(2, 8)]
    sizes = [float(d) for d in box_grid]
    if len(sizes) < 3:
        raise UsageError("dimension_doubling needs at least three box sizes")
    if any(d <= 0.0 for d in sizes):
        raise UsageError("box sizes must be positive")
    counts = box_counts(image, sizes)
    if spread == 0.0:
        return DimensionEstimate(dimension=0.0, scales=sizes, counts=counts)
    fit = linear_fit(np.log(1.0 / np.array(sizes)), np.log(counts))
    return DimensionEstimate(dimension=fit.slope, scales=sizes, counts=counts, fit=fit)
