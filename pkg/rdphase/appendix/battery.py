"""
The appendix validator battery.

Each check compares one closed-form estimate with its quadrature or Monte Carlo
companion and raises `AppendixValidationError` when they disagree.
"""

import json
import math
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy import stats

from rdphase.appendix.kit import (
    convolution_tail_check,
    gauss_negative_moment,
    gauss_negative_moment_mc,
    gauss_negative_moment_quadrature,
    monotone_coupling_check,
    sdi_hitting_bound,
    sdi_mc,
    small_ball_mc,
    small_ball_probability,
)
from rdphase.chain.walk import excursion_bound_check
from rdphase.core.exceptions import OutputError, RDPhaseError, UsageError
from rdphase.core.field import Field, TorusGrid
from rdphase.dynamics.noise import (
    MIN_WHITENESS_SLABS,
    NoiseStream,
    mix_slabs,
    mixing_f,
    mixing_g,
    whiteness_test,
)
from rdphase.testing.harness import CheckResult
from rdphase.utils.logging import get_logger

logger = get_logger(__name__)

# Monte Carlo sizes per battery scale
SCALES: Dict[str, Dict[str, int]] = {
    "quick": {
        "small_ball_paths": 50_000,
        "gauss_samples": 200_000,
        "coupling_samples": 10_000,
        "sdi_paths": 10_000,
        "tail_replicas": 200,
        "walk_samples": 10_000,
    },
    "full": {
        "small_ball_paths": 100_000,
        "gauss_samples": 1_000_000,
        "coupling_samples": 10_000,
        "sdi_paths": 50_000,
        "tail_replicas": 1000,
        "walk_samples": 100_000,
    },
}


class AppendixValidationError(AssertionError):
    """An estimate missed its oracle; carries the check name and the failure detail."""

    def __init__(self, check: str, detail: str):
        super().__init__(f"{check}: {detail}")
        self.check = check
        self.detail = detail


class AppendixValidator:
    """
    Runs the closed-form-against-oracle checks of the appendix estimates.

    Substreams of the master seed keep the checks independent of one another
    and of the order they run in.

    Example:
        validator = AppendixValidator(seed=0, scale="quick")
        failures = validator.run_all_checks()
        validator.to_json("appendix_report.json")
    """

    def __init__(
        self, seed: int = 0, scale: str = "quick", workers: Optional[int] = None
    ):
        if scale not in SCALES:
            raise UsageError(f"unknown battery scale '{scale}', expected quick or full")
        self.seed = seed
        self.scale = scale
        self.sizes = SCALES[scale]
        self.workers = workers
        self.results: List[CheckResult] = []

    def _stream(self, substream: int) -> NoiseStream:
        return NoiseStream(self.seed, replica_id=0, substream=substream)

    def _record(self, name: str, passed: bool, detail: str, **metrics) -> None:
        self.results.append(
            CheckResult(name=name, passed=passed, detail=detail, metrics=metrics)
        )
        if not passed:
            raise AppendixValidationError(name, detail)

    def validate_small_ball(self, eps: float = 0.5, A: float = 1.0) -> None:
        """
        Raises:
            AppendixValidationError: If MC and closed form differ by more than 0.01.
        """
        exact = small_ball_probability(eps, A)
        estimate = small_ball_mc(
            eps, A, self._stream(1), paths=self.sizes["small_ball_paths"]
        )
        gap = abs(exact - estimate.value)
        self._record(
            "small_ball",
            gap <= 0.01,
            f"closed form {exact:.6f}, Monte Carlo {estimate.value:.6f}",
            closed_form=exact,
            estimate=estimate.value,
            stderr=estimate.stderr,
            gap=gap,
        )

    def validate_gauss_moment(self, s: float = 0.3, variance: float = 1.0) -> None:
        """
        Raises:
            AppendixValidationError: If MC at a = 0 misses the Γ formula by more
                than 3σ, the quadrature misses it by more than 1e-6, or the
                a = 0.5 moment is not smaller.
        """
        exact = gauss_negative_moment(s, variance)
        quadrature = gauss_negative_moment_quadrature(s, variance)
        samples = self.sizes["gauss_samples"]
        centred = gauss_negative_moment_mc(s, variance, self._stream(2), samples=samples)
        shifted = gauss_negative_moment_mc(
            s, variance, self._stream(3), a=0.5, samples=samples
        )
        z = abs(centred.value - exact) / centred.stderr
        passed = (
            z <= 3.0
            and abs(quadrature - exact) <= 1e-6 * exact
            and shifted.value < exact
        )
        self._record(
            "gauss_moment",
            passed,
            f"Γ formula {exact:.6f}, quadrature {quadrature:.6f}, "
            f"MC {centred.value:.6f} (z={z:.2f}), MC at a=0.5 {shifted.value:.6f}",
            closed_form=exact,
            quadrature=quadrature,
            estimate=centred.value,
            stderr=centred.stderr,
            shifted_estimate=shifted.value,
        )

    def validate_monotone_coupling(self, shift: float = 0.5) -> None:
        """
        Raises:
            AppendixValidationError: If Y < X anywhere or the KS statistic of Y
                against H reaches its 1% critical value.
        """
        rng = self._stream(4).next_generator()
        x = rng.standard_normal(self.sizes["coupling_samples"])
        H = stats.norm(loc=shift).cdf
        check = monotone_coupling_check(x, stats.norm.cdf, H)
        self._record(
            "monotone_coupling",
            check.passed,
            f"min(Y-X) {check.min_gap:.3g}, KS {check.ks_statistic:.4f} "
            f"(critical {check.ks_critical:.4f})",
            **check.model_dump(),
        )

    def validate_sdi(
        self, a: float = 1.0, b: float = 1.0, t: float = 1.0, eps: float = 0.1
    ) -> None:
        """
        Raises:
            AppendixValidationError: If the MC probability exceeds the bound by
                more than 3σ.
        """
        bound = sdi_hitting_bound(a, b, t, eps)
        estimate = sdi_mc(a, b, t, eps, self._stream(5), paths=self.sizes["sdi_paths"])
        self._record(
            "sdi",
            estimate.value <= bound + 3.0 * estimate.stderr,
            f"Monte Carlo {estimate.value:.6f} against bound {bound:.6f}",
            bound=bound,
            estimate=estimate.value,
            stderr=estimate.stderr,
        )

    def validate_convolution_tail(
        self, T: float = 1.0, lam: float = 1.0, lip: float = 1.0, level: float = 1.0
    ) -> None:
        """
        Raises:
            AppendixValidationError: If log P(sup > ρ) does not fall linearly in ρ².
        """
        tail = convolution_tail_check(
            T,
            lam,
            lip,
            level,
            None,
            self.sizes["tail_replicas"],
            seed=self.seed + 1,
            workers=self.workers,
        )
        self._record(
            "convolution_tail",
            tail.decays,
            f"slope of log P against ρ²: {tail.slope}",
            slope=tail.slope,
            fitted_constant=tail.fitted_constant,
            rows=[r.model_dump() for r in tail.rows],
        )

    def validate_walk_inequality(self, p: float = 2.0 / 3.0) -> None:
        """
        Raises:
            AppendixValidationError: If any MC excursion count exceeds its bound + 3σ.
        """
        checks = excursion_bound_check(
            p, [0, 2, 4, 6], self.sizes["walk_samples"], self._stream(6)
        )
        self._record(
            "walk_inequality",
            all(c.passed for c in checks),
            "; ".join(f"k={c.k}: {c.mc_mean:.4f} <= {c.bound:.4f}" for c in checks),
            rows=[c.model_dump() for c in checks],
        )

    def validate_whiteness(self, points: int = 8) -> None:
        """
        Raises:
            AppendixValidationError: If noise mixed with field-dependent weights
                fails the whiteness test.
        """
        grid = TorusGrid(points)
        y = Field.from_function(grid, lambda x: 0.5 + 0.5 * np.cos(math.pi * x))
        gw, fw = mixing_g(y.values), mixing_f(y.values)
        first, second = self._stream(7), self._stream(8)
        slabs = [
            mix_slabs(first.next_slab(grid), second.next_slab(grid), gw, fw)
            for _ in range(MIN_WHITENESS_SLABS)
        ]
        report = whiteness_test(slabs)
        self._record(
            "whiteness",
            report.passed,
            f"largest standardised deviation "
            f"{max(report.max_mean_z, report.max_variance_z, report.max_covariance_z):.2f} "
            f"(threshold {report.threshold_z:.2f})",
            max_mean_z=report.max_mean_z,
            max_variance_z=report.max_variance_z,
            max_covariance_z=report.max_covariance_z,
            max_lag1_z=report.max_lag1_z,
        )

    def checks(self) -> List[Callable[[], None]]:
        return [
            self.validate_small_ball,
            self.validate_gauss_moment,
            self.validate_monotone_coupling,
            self.validate_sdi,
            self.validate_convolution_tail,
            self.validate_walk_inequality,
            self.validate_whiteness,
        ]

    def run_all_checks(self) -> List[str]:
        """
        Runs the whole battery and returns a list of failures.

        Returns:
            A list of strings, one per failed check. An empty list means all
            checks passed.
        """
        self.results = []
        failures = []
        for check in self.checks():
            try:
                check()
            except AppendixValidationError as e:
                failures.append(str(e))
            except RDPhaseError as e:
                name = check.__name__.replace("validate_", "")
                self.results.append(
                    CheckResult(name=name, passed=False, detail=e.reason())
                )
                failures.append(f"{name}: {e.reason()}")
        logger.info("appendix battery: %d checks, %d failed", len(self.results), len(failures))
        return failures

    def report(self) -> Dict[str, object]:
        return {
            "seed": self.seed,
            "scale": self.scale,
            "passed": all(r.passed for r in self.results),
            "checks": {r.name: r.summary() for r in self.results},
        }

    def to_json(self, filepath) -> None:
        """
        Raises:
            OutputError: If the report cannot be written.
        """
        try:
            with open(filepath, "w", encoding="utf-8") as f:
                json.dump(self.report(), f, indent=2, sort_keys=True, default=str)
        except OSError as e:
            raise OutputError(f"could not write '{filepath}': {e}") from e
