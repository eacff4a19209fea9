"""
Tests for tree reductions and statistical helpers.
"""

import math

import numpy as np
import pytest

from rdphase.core.exceptions import UsageError
from rdphase.utils.stats import (
    RunningMoments,
    linear_fit,
    mean_and_stderr,
    pairwise_sum,
    tree_mean,
    wilson_interval,
)


class TestPairwiseSum:
    """Test suite for pairwise_sum."""

    def test_scalars_and_arrays(self):
        assert pairwise_sum([1.0, 2.0, 3.0, 4.0, 5.0]) == 15.0
        np.testing.assert_array_equal(
            pairwise_sum([np.ones(3), 2 * np.ones(3), 3 * np.ones(3)]), 6 * np.ones(3)
        )

    def test_empty(self):
        assert pairwise_sum([]) == 0.0

    def test_order_is_fixed(self):
        """The same inputs always reduce to the same bits."""
        rng = np.random.default_rng(0)
        values = list(rng.standard_normal(1001) * 1e8)
        assert pairwise_sum(values) == pairwise_sum(list(values))

    def test_tree_mean_empty(self):
        with pytest.raises(UsageError):
            tree_mean([])


class TestMeanAndStderr:
    """Test suite for mean_and_stderr and RunningMoments."""

    def test_known_sample(self):
        mean, stderr = mean_and_stderr([1.0, 2.0, 3.0, 4.0])
        assert mean == pytest.approx(2.5)
        assert stderr == pytest.approx(math.sqrt(5.0 / 3.0 / 4.0))

    def test_single_value(self):
        mean, stderr = mean_and_stderr([3.0])
        assert mean == 3.0
        assert math.isnan(stderr)

    def test_running_moments_agree(self):
        values = [0.5, 1.5, -2.0, 4.0, 3.25]
        moments = RunningMoments()
        for v in values:
            moments.update(v)
        mean, stderr = mean_and_stderr(values)
        assert moments.count == 5
        assert moments.mean == pytest.approx(mean)
        assert moments.variance == pytest.approx(np.var(values, ddof=1))
        assert moments.stderr == pytest.approx(stderr)


class TestWilsonInterval:
    """Test suite for wilson_interval."""

    def test_interval_contains_estimate(self):
        low, high = wilson_interval(30, 100)
        assert low < 0.3 < high

    def test_extremes_stay_in_unit_interval(self):
        low, high = wilson_interval(0, 20)
        assert low == pytest.approx(0.0, abs=1e-12)
        assert 0.0 < high < 0.25
        low, high = wilson_interval(20, 20)
        assert high == pytest.approx(1.0)

    def test_no_trials(self):
        with pytest.raises(UsageError):
            wilson_interval(0, 0)


class TestLinearFit:
    """Test suite for linear_fit."""

    def test_exact_line(self):
        fit = linear_fit([0.0, 1.0, 2.0, 3.0], [1.0, 3.0, 5.0, 7.0])
        assert fit.slope == pytest.approx(2.0)
        assert fit.intercept == pytest.approx(1.0)
        assert fit.points == 4

    def test_noisy_line_interval(self):
        rng = np.random.default_rng(1)
        x = np.linspace(0.0, 1.0, 50)
        y = -0.5 * x + 0.01 * rng.standard_normal(50)
        fit = linear_fit(x, y)
        assert fit.ci_low < -0.5 < fit.ci_high

    def test_two_points_have_no_interval(self):
        fit = linear_fit([0.0, 1.0], [0.0, 2.0])
        assert fit.slope == pytest.approx(2.0)
        assert math.isnan(fit.ci_low)

    def test_degenerate_abscissae(self):
        with pytest.raises(UsageError):
            linear_fit([1.0, 1.0, 1.0], [0.0, 1.0, 2.0])
        with pytest.raises(UsageError):
            linear_fit([1.0], [0.0])
