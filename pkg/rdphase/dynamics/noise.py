# rdphase/dynamics/noise.py

"""
Discretised space-time white noise.

A `NoiseStream` is addressed by counter: the Philox key holds
(master_seed, replica_id) and the counter holds (substream, step), so slab n of
any replica can be produced without touching any other stream. Slabs hold
unscaled standard normals; the solver applies the √(dt/dx) factor.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Union

import numpy as np
from pydantic import BaseModel
from scipy import stats

from rdphase.core.exceptions import PreconditionError, UsageError
from rdphase.core.field import Field, TorusGrid
from rdphase.utils.logging import get_logger

logger = get_logger(__name__)

_WORD = (1 << 64) - 1
MIN_WHITENESS_SLABS = 10_000


@dataclass(frozen=True)
class NoiseSlab:
    """One time step of noise: J i.i.d. standard normals, one per grid cell."""

    grid: TorusGrid
    xi: np.ndarray = field(repr=False)

    def __post_init__(self):
        xi = np.array(self.xi, dtype=np.float64)
        if xi.shape != (self.grid.points,):
            raise UsageError(
                f"slab needs {self.grid.points} draws, got shape {xi.shape}"
            )
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)


@dataclass
class NoiseStream:
    """
    A replica's noise source.

    Example:
        stream = NoiseStream(master_seed=7, replica_id=3)
        slab = stream.next_slab(grid)       # step 0
        partner = stream.spawn(1)           # independent noise for a coupling
    """

    master_seed: int
    replica_id: int = 0
    substream: int = 0
    step_counter: int = 0

    def __post_init__(self):
        if self.replica_id < 0 or self.substream < 0:
            raise UsageError("replica and substream ids must be non-negative")
        self.master_seed = int(self.master_seed) & _WORD

    def generator_at(self, step: int) -> np.random.Generator:
        key = (self.master_seed << 64) | (int(self.replica_id) & _WORD)
        counter = ((int(self.substream) & _WORD) << 192) | (
            (int(step) & _WORD) << 128
        )
        return np.random.Generator(np.random.Philox(counter=counter, key=key))

    def next_generator(self) -> np.random.Generator:
        """The generator of the next counter slot; advances the stream."""
        generator = self.generator_at(self.step_counter)
        self.step_counter += 1
        return generator

    def next_slab(self, grid: TorusGrid) -> NoiseSlab:
        return NoiseSlab(grid, self.next_generator().standard_normal(grid.points))

    def spawn(self, substream: int) -> "NoiseStream":
        """A fresh stream for the same replica on another substream."""
        return NoiseStream(self.master_seed, self.replica_id, substream)

    def skip(self, steps: int) -> None:
        self.step_counter += steps


def rng_identity() -> Dict[str, str]:
    """Algorithm and version recorded with every run."""
    return {
        "algorithm": "numpy.random.Philox",
        "numpy": np.__version__,
        "addressing": "key=(seed, replica) counter=(substream, step)",
    }


def mixing_f(y):
    """f(y) = √(|y| ∧ 1)."""
    value = np.sqrt(np.minimum(np.abs(y), 1.0))
    return float(value) if np.ndim(value) == 0 else value


def mixing_g(y):
    """g(y) = √(1 - |y| ∧ 1), so that f² + g² = 1."""
    value = np.sqrt(1.0 - np.minimum(np.abs(y), 1.0))
    return float(value) if np.ndim(value) == 0 else value


Weights = Union[Field, np.ndarray]


def _weight_values(w: Weights) -> np.ndarray:
    return w.values if isinstance(w, Field) else np.asarray(w, dtype=np.float64)


def mix_slabs(s1: NoiseSlab, s2: NoiseSlab, gw: Weights, fw: Weights) -> NoiseSlab:
    """
    gw·ξ₁ + fw·ξ₂ entrywise.

    Raises:
        UsageError: If the slabs or weights live on different grids.
        PreconditionError: If gw² + fw² differs from 1 by more than 1e-12.
    """
    if s1.grid != s2.grid:
        raise UsageError("cannot mix slabs from different grids")
    g = _weight_values(gw)
    f = _weight_values(fw)
    if g.shape != s1.xi.shape or f.shape != s1.xi.shape:
        raise UsageError("mixing weights must match the slab length")
    defect = float(np.max(np.abs(g * g + f * f - 1.0)))
    if defect > 1e-12:
        raise PreconditionError(f"mixing weights violate g² + f² = 1 by {defect:.3g}")
    return NoiseSlab(s1.grid, g * s1.xi + f * s2.xi)


class WhitenessReport(BaseModel):
    """Per-cell and cross-cell moment checks of a slab sequence."""

    slabs: int
    cells: int
    cell_variances: List[float]
    max_mean_z: float
    max_variance_z: float
    max_covariance_z: float
    max_lag1_z: float
    threshold_z: float
    tests: int
    passed: bool


def whiteness_test(slabs: Sequence[NoiseSlab], sigma_level: float = 4.0):
    """
    Tests a slab sequence against i.i.d. N(0, 1).

    Per cell: mean, variance and lag-1 time correlation; across cells: every
    pairwise covariance. Each statistic is standardised with its exact standard
    error under the null and compared with a Bonferroni threshold whose
    family-wise level is that of a single `sigma_level` test.

    Raises:
        UsageError: With fewer than 10⁴ slabs.
    """
    n = len(slabs)
    if n < MIN_WHITENESS_SLABS:
        raise UsageError(f"whiteness_test needs >= {MIN_WHITENESS_SLABS} slabs, got {n}")
    x = np.stack([s.xi for s in slabs])
    cells = x.shape[1]

    mean_z = np.abs(x.mean(axis=0)) * math.sqrt(n)
    variances = (x * x).mean(axis=0)
    variance_z = np.abs(variances - 1.0) / math.sqrt(2.0 / n)
    lag1 = (x[1:] * x[:-1]).mean(axis=0)
    lag1_z = np.abs(lag1) * math.sqrt(n - 1)
    gram = x.T @ x / n
    upper = np.triu_indices(cells, k=1)
    covariance_z = np.abs(gram[upper]) * math.sqrt(n)

    tests = 3 * cells + covariance_z.size
    threshold = float(stats.norm.isf(stats.norm.sf(sigma_level) / tests))
    worst = {
        "max_mean_z": float(mean_z.max()),
        "max_variance_z": float(variance_z.max()),
        "max_covariance_z": float(covariance_z.max()) if covariance_z.size else 0.0,
        "max_lag1_z": float(lag1_z.max()),
    }
    passed = all(value <= threshold for value in worst.values())
    if not passed:
        logger.info("whiteness test failed: %s (threshold %.3f)", worst, threshold)
    return WhitenessReport(
        slabs=n,
        cells=cells,
        cell_variances=[float(v) for v in variances],
        threshold_z=threshold,
        tests=tests,
        passed=passed,
        **worst,
    )
