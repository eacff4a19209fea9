"""
Tests for the closed-form estimates and their companions.
"""

import math

import numpy as np
import pytest
from scipy import special, stats

from rdphase.appendix.kit import (
    QuadratureConfig,
    clipped_integrand,
    convolution_sup,
    convolution_tail_check,
    default_rho_grid,
    gauss_negative_moment,
    gauss_negative_moment_mc,
    gauss_negative_moment_quadrature,
    gaussian_band,
    monotone_coupling,
    sdi_hitting_bound,
    small_ball_mc,
    small_ball_probability,
)
from rdphase.core.exceptions import DomainError, PreconditionError, UsageError
from rdphase.dynamics.noise import NoiseStream


class TestGaussianBand:
    """Test suite for gaussian_band and the small-ball probability."""

    @pytest.mark.parametrize("c", [0.1, 0.5, 1.0, 2.5])
    def test_matches_erf(self, c):
        expected = special.erf(c / math.sqrt(2.0))
        assert gaussian_band(c) == pytest.approx(expected, abs=1e-12)

    def test_edges(self):
        assert gaussian_band(0.0) == 0.0
        assert gaussian_band(-1.0) == 0.0
        assert gaussian_band(50.0) == pytest.approx(1.0, abs=1e-12)

    def test_quadrature_config(self):
        with pytest.raises(ValueError):
            QuadratureConfig(nodes=16)

    def test_small_ball(self):
        expected = special.erf(0.5 / math.sqrt(2.0))
        assert small_ball_probability(0.5, 1.0) == pytest.approx(expected, abs=1e-12)
        assert small_ball_probability(1.0, 4.0) == pytest.approx(expected, abs=1e-12)
        assert small_ball_probability(math.inf, 1.0) == 1.0

    @pytest.mark.parametrize("eps, A", [(0.0, 1.0), (0.5, 0.0), (-1.0, 1.0)])
    def test_small_ball_domain(self, eps, A):
        with pytest.raises(DomainError):
            small_ball_probability(eps, A)

    def test_small_ball_monte_carlo(self):
        estimate = small_ball_mc(0.5, 1.0, NoiseStream(0, 0), paths=20_000, steps=500)
        assert estimate.samples == 20_000
        assert abs(estimate.value - small_ball_probability(0.5, 1.0)) < 0.02


class TestStochasticInequality:
    """Test suite for sdi_hitting_bound."""

    def test_band_value(self):
        c = 2.0 * (1.0 - 0.1 * math.exp(-0.5)) / 1.0
        assert sdi_hitting_bound(1.0, 1.0, 1.0, 0.1) == pytest.approx(
            special.erf(c / math.sqrt(2.0)), abs=1e-12
        )

    def test_infinite_energy(self):
        assert sdi_hitting_bound(1.0, math.inf, 1.0, 0.1) == 0.0

    def test_eps_at_top_of_range(self):
        eps = 2.0 * math.exp(0.5)
        assert sdi_hitting_bound(2.0, 1.0, 1.0, eps) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize(
        "a, b, t, eps",
        [(0.0, 1.0, 1.0, 0.1), (1.0, 1.0, 1.0, 2.0), (1.0, 1.0, 0.0, 0.1)],
    )
    def test_domain(self, a, b, t, eps):
        with pytest.raises(DomainError):
            sdi_hitting_bound(a, b, t, eps)


class TestMonotoneCoupling:
    """Test suite for monotone_coupling."""

    def test_shifted_normal(self):
        x = np.linspace(-3.0, 3.0, 13)
        y = monotone_coupling(x, stats.norm.cdf, stats.norm(loc=0.5).cdf)
        np.testing.assert_allclose(y, x + 0.5, atol=1e-8)

    def test_step_distribution(self):
        """Every sample is carried onto a point mass placed beyond the test grid."""

        def H(y):
            return (np.asarray(y) >= 12.0).astype(float)

        y = monotone_coupling([-1.0, 0.0, 1.0], stats.norm.cdf, H)
        np.testing.assert_allclose(y, 12.0, atol=1e-9)

    def test_precondition(self):
        with pytest.raises(PreconditionError, match="G < H"):
            monotone_coupling([0.0], stats.norm(loc=0.5).cdf, stats.norm.cdf)


class TestNegativeMoments:
    """Test suite for the negative Gaussian moments."""

    @pytest.mark.parametrize("s, variance", [(0.3, 1.0), (0.45, 2.0), (0.8, 0.5)])
    def test_quadrature_matches_gamma_formula(self, s, variance):
        exact = gauss_negative_moment(s, variance)
        assert gauss_negative_moment_quadrature(s, variance) == pytest.approx(
            exact, rel=1e-6
        )

    def test_shift_lowers_the_moment(self):
        shifted = gauss_negative_moment_quadrature(0.3, 1.0, a=0.5)
        assert shifted < gauss_negative_moment(0.3, 1.0)

    def test_monte_carlo(self):
        stream = NoiseStream(2, 0)
        estimate = gauss_negative_moment_mc(0.3, 1.0, stream, samples=200_000)
        exact = gauss_negative_moment(0.3, 1.0)
        assert abs(estimate.value - exact) < 5.0 * estimate.stderr

    @pytest.mark.parametrize("s, variance", [(0.0, 1.0), (1.0, 1.0), (0.3, 0.0)])
    def test_domain(self, s, variance):
        with pytest.raises(DomainError):
            gauss_negative_moment(s, variance)

    def test_monte_carlo_needs_small_s(self):
        with pytest.raises(DomainError, match="s < 1/2"):
            gauss_negative_moment_mc(0.6, 1.0, NoiseStream(0, 0), samples=10)

    def test_negative_shift(self):
        with pytest.raises(DomainError):
            gauss_negative_moment_quadrature(0.3, 1.0, a=-0.1)


class TestConvolutionTail:
    """Test suite for the stochastic convolution tail."""

    def test_clipping(self):
        f = clipped_integrand(1.0, 1.0)
        np.testing.assert_array_equal(f(np.array([-10.0, 0.0, 10.0])), [-4.0, 1.0, 4.0])

    def test_linear_in_level(self):
        def sup_at(level):
            integrand = clipped_integrand(1.0, level)
            return convolution_sup(1.0, 1.0, integrand, NoiseStream(0, 3), 32, 50)

        one, two = sup_at(1.0), sup_at(2.0)
        assert one > 0.0
        assert two == pytest.approx(2.0 * one, rel=1e-12)

    def test_rho_grid(self):
        assert default_rho_grid([0.0, 0.0]) == [1.0]
        grid = default_rho_grid(np.arange(101.0))
        assert grid == pytest.approx([50.0, 70.0, 85.0, 95.0])

    def test_noiseless_tail_is_empty(self):
        tail = convolution_tail_check(
            1.0, 0.0, 1.0, 1.0, None, replicas=3, points=16, steps=10, workers=1
        )
        assert tail.sups == [0.0, 0.0, 0.0]
        assert [r.probability for r in tail.rows] == [0.0]
        assert not tail.decays

    def test_explicit_rho_grid(self):
        tail = convolution_tail_check(
            0.5, 1.0, 1.0, 1.0, [0.0, 1e6], replicas=4, points=16, steps=20, workers=1
        )
        assert [r.exceedances for r in tail.rows] == [4, 0]
        assert tail.slope is None

    def test_arguments(self):
        with pytest.raises(DomainError):
            convolution_tail_check(1.0, 1.0, 1.0, 0.0, None, replicas=4)
        with pytest.raises(UsageError):
            convolution_tail_check(1.0, 1.0, 1.0, 1.0, None, replicas=1)
