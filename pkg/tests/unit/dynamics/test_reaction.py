"""
Tests for potentials, noise coefficients and derived constants.
"""

import math

import numpy as np
import pytest

from rdphase.core.exceptions import ConfigurationError, DomainError
from rdphase.dynamics.reaction import (
    DiffusionSpec,
    PotentialSpec,
    check_hypotheses,
    compute_level_M,
    eval_V,
    eval_V_truncated,
    gamma_constant,
    level_threshold,
    moment_bound,
    moment_bound_R,
    moment_bound_R_numeric,
    reaction_drift,
    rescale,
)


class TestPotentialSpec:
    """Test suite for PotentialSpec."""

    def test_kpp_and_allen_cahn(self):
        assert eval_V(PotentialSpec.kpp(), 0.5) == pytest.approx(0.25)
        assert eval_V(PotentialSpec.allen_cahn(), 0.5) == pytest.approx(0.375)

    def test_fractional_power_rejects_negative(self):
        spec = PotentialSpec.power(0.5)
        with pytest.raises(DomainError):
            eval_V(spec, -0.1)

    def test_tabulated_extrapolates_linearly(self):
        spec = PotentialSpec.tabulated([0.0, 1.0, 2.0], [0.0, 1.0, 4.0])
        assert spec.F(1.5) == pytest.approx(2.5)
        assert spec.F(3.0) == pytest.approx(7.0)
        assert spec.F(-1.0) == pytest.approx(-1.0)

    def test_bad_table(self):
        with pytest.raises(ConfigurationError):
            PotentialSpec.tabulated([0.0, 0.0], [0.0, 1.0])

    def test_bad_power(self):
        with pytest.raises(ConfigurationError):
            PotentialSpec.power(0.0)

    def test_truncated_potential(self):
        spec = PotentialSpec.kpp()
        values = eval_V_truncated(spec, 1, np.array([-1.0, 0.5, 3.0]))
        np.testing.assert_allclose(values, [0.0, 0.25, 0.0])
        with pytest.raises(DomainError):
            eval_V_truncated(spec, 0, 0.5)

    def test_drift_is_zero_off_domain(self):
        spec = PotentialSpec.power(0.5)
        drift = reaction_drift(spec, np.array([-0.5, 0.0, 0.25]))
        assert drift[0] == 0.0
        assert drift[1] == 0.0
        assert drift[2] == pytest.approx(0.25 - 0.125)

    def test_drift_disabled(self):
        drift = reaction_drift(PotentialSpec.kpp(drift_enabled=False), np.ones(4))
        assert not np.any(drift)


class TestHypotheses:
    """Test suite for check_hypotheses."""

    def test_kpp_passes(self):
        report = check_hypotheses(PotentialSpec.kpp())
        assert report.passed
        assert report.v_max == pytest.approx(0.25, rel=1e-4)

    def test_zero_nonlinearity_fails(self):
        report = check_hypotheses(PotentialSpec.tabulated([0.0, 1.0], [0.0, 0.0]))
        assert not report.passed
        assert "sup V is not attained inside the test grid" in report.failures()


class TestConstants:
    """Test suite for γ, R(k) and the level M."""

    def test_gamma(self):
        assert gamma_constant(0.0) == 0.25
        assert gamma_constant(1.0) == pytest.approx(4096.0)
        with pytest.raises(DomainError):
            gamma_constant(-1.0)

    def test_kpp_closed_form(self):
        """For F = y², R(k) = (1 + γk²)/4."""
        assert moment_bound_R(PotentialSpec.kpp(), 2.0, 0.25) == pytest.approx(0.5)

    @pytest.mark.parametrize("nu, c", [(1.0, 1.0), (2.0, 1.0), (1.0, 3.0)])
    def test_numeric_matches_closed_form(self, nu, c):
        spec = PotentialSpec.power(nu, c)
        closed = moment_bound_R(spec, 3.0, 0.5)
        assert moment_bound_R_numeric(spec, 3.0, 0.5) == pytest.approx(closed, rel=1e-8)

    def test_moment_bound(self):
        bound = moment_bound(PotentialSpec.kpp(), 2.0, 0.25, psi0_sup=1.0)
        assert bound == pytest.approx((2.0 + 4.0 * 0.5) ** 2)

    def test_moment_order_below_two(self):
        with pytest.raises(DomainError):
            moment_bound_R(PotentialSpec.kpp(), 1.5, 1.0)

    @pytest.mark.parametrize(
        "spec, level",
        [
            (PotentialSpec.kpp(), -2),
            (PotentialSpec.allen_cahn(), -2),
            (PotentialSpec.power(1.0, 4.0), -4),
        ],
    )
    def test_level_M(self, spec, level):
        assert compute_level_M(spec) == level

    def test_level_bounds_hold(self):
        """½v <= V(v) <= v below 2^(M+1)."""
        spec = PotentialSpec.allen_cahn()
        M = compute_level_M(spec)
        v = np.geomspace(1e-6, 2.0 ** (M + 1), 200)
        V = eval_V(spec, v)
        assert np.all(V <= v)
        assert np.all(V >= 0.5 * v - 1e-15)

    def test_tabulated_threshold(self):
        spec = PotentialSpec.tabulated([0.0, 1.0], [0.0, 1.0])
        assert level_threshold(spec) == 0.0
        spec = PotentialSpec.tabulated([0.0, 1.0], [0.0, 0.25])
        assert math.isinf(level_threshold(spec))
        assert compute_level_M(spec) == -1


class TestDiffusionSpec:
    """Test suite for DiffusionSpec."""

    def test_linear(self):
        sigma = DiffusionSpec.linear(2.0)
        assert sigma.lip == 2.0
        assert sigma.lower == 2.0
        np.testing.assert_allclose(sigma(np.array([1.0, -0.5])), [2.0, -1.0])

    def test_sigma_must_vanish_at_zero(self):
        with pytest.raises(ConfigurationError, match="sigma\\(0\\)"):
            DiffusionSpec(sigma=lambda u: u + 1.0, lip=1.0)

    def test_sector_bound_is_checked(self):
        with pytest.raises(ConfigurationError, match="exceeds"):
            DiffusionSpec(sigma=lambda u: 2.0 * u, lip=1.0)

    def test_named(self):
        assert DiffusionSpec.named("sine", 0.5).lip == 0.5
        with pytest.raises(ConfigurationError, match="unknown sigma"):
            DiffusionSpec.named("cubic")

    def test_clipped(self):
        clipped = DiffusionSpec.linear(1.0).clipped(0.5)
        np.testing.assert_allclose(clipped(np.array([-2.0, 0.2, 3.0])), [-0.5, 0.2, 0.5])
        assert clipped.lower == 0.0


class TestRescale:
    """Test suite for rescale."""

    def test_power_coefficient_scales(self):
        potential, diffusion = rescale(PotentialSpec.kpp(), DiffusionSpec.linear(1.0), 4.0)
        assert potential.coefficient == pytest.approx(4.0)
        assert diffusion.name == "linear(1)"

    def test_custom_sigma_is_conjugated(self):
        _, diffusion = rescale(PotentialSpec.kpp(), DiffusionSpec.saturating(1.0), 2.0)
        u = np.array([0.5])
        np.testing.assert_allclose(diffusion(u), (1.0 / (1.0 + 1.0)) / 2.0 * np.ones(1))

    def test_factor_must_be_positive(self):
        with pytest.raises(DomainError):
            rescale(PotentialSpec.kpp(), DiffusionSpec.linear(1.0), 0.0)
