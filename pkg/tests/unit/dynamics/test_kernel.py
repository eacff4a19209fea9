"""
Tests for the periodic heat kernel.
"""

import math

import numpy as np
import pytest

from rdphase.core.exceptions import DomainError
from rdphase.core.field import Field, TorusGrid
from rdphase.dynamics.kernel import (
    KernelEvalConfig,
    apply_semigroup,
    chapman_kolmogorov_residual,
    cross_representation_errors,
    heat_kernel,
    kernel_fourier,
    kernel_image_sum,
    kernel_l1_difference,
    kernel_l2_difference,
    total_mass,
)


class TestRepresentations:
    """Test suite for the image sum and the theta series."""

    @pytest.mark.parametrize("t", [0.01, 0.05, 0.2, 1.0, 5.0])
    def test_representations_agree(self, t):
        separations = np.linspace(-1.0, 1.0, 17)
        image = kernel_image_sum(t, separations, 0.0)
        fourier = kernel_fourier(t, separations, 0.0)
        np.testing.assert_allclose(image, fourier, rtol=0, atol=1e-10)

    def test_scalar_in_scalar_out(self):
        assert isinstance(heat_kernel(0.1, 0.3, -0.2), float)

    def test_symmetry_and_periodicity(self):
        assert heat_kernel(0.3, 0.4, -0.7) == pytest.approx(heat_kernel(0.3, -0.7, 0.4))
        assert heat_kernel(0.03, 0.9, 0.0) == pytest.approx(heat_kernel(0.03, -1.1, 0.0))

    def test_long_time_limit(self):
        """p_t tends to the uniform density 1/2."""
        assert heat_kernel(10.0, 0.3, -0.5) == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize("t", [0.0, -1.0])
    def test_non_positive_time(self, t):
        with pytest.raises(DomainError):
            heat_kernel(t, 0.0, 0.0)

    def test_crossover_switches_representation(self):
        cfg = KernelEvalConfig(crossover_time=0.5)
        assert heat_kernel(0.4, 0.1, 0.0, cfg) == kernel_image_sum(0.4, 0.1, 0.0, cfg)
        assert heat_kernel(0.6, 0.1, 0.0, cfg) == kernel_fourier(0.6, 0.1, 0.0, cfg)

    def test_cross_representation_rows(self):
        rows = cross_representation_errors([0.1, 1.0], [0.0, 0.5, -0.5])
        assert len(rows) == 6
        assert set(rows[0]) == {"t", "separation", "image_sum", "fourier", "abs_error"}
        assert max(r["abs_error"] for r in rows) <= 1e-10


class TestIdentities:
    """Test suite for the semigroup identities."""

    @pytest.mark.parametrize("t", [0.01, 0.1, 1.0])
    def test_unit_mass(self, t):
        assert total_mass(t, 0.25) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize(
        "t, s, x, z", [(0.05, 0.1, 0.3, -0.4), (0.5, 1.0, -0.9, 0.8)]
    )
    def test_chapman_kolmogorov(self, t, s, x, z):
        assert chapman_kolmogorov_residual(t, s, x, z) <= 1e-8

    def test_semigroup_damps_first_mode(self):
        """P_t cos(πx) = e^{-π²t} cos(πx)."""
        grid = TorusGrid(32)
        f = Field.from_function(grid, lambda x: np.cos(np.pi * x))
        g = apply_semigroup(f, 0.1)
        np.testing.assert_allclose(
            g.values, math.exp(-(math.pi**2) * 0.1) * f.values, atol=1e-12
        )

    def test_semigroup_rejects_negative_time(self):
        with pytest.raises(DomainError):
            apply_semigroup(Field.ones(TorusGrid(8)), -0.1)


class TestKernelDifferences:
    """Test suite for the L¹ and L² kernel differences."""

    def test_same_point_is_zero(self):
        assert kernel_l1_difference(0.2, 0.2, 1.0) == 0.0
        assert kernel_l2_difference(0.5, 2.5, 1.0) == 0.0

    def test_l1_grows_with_horizon(self):
        short = kernel_l1_difference(0.0, 0.3, 0.5)
        long = kernel_l1_difference(0.0, 0.3, 1.0)
        assert 0.0 < short < long <= 2.0

    @pytest.mark.parametrize("delta", [0.1, 0.5, 1.0])
    def test_l2_series_matches_quadrature(self, delta):
        series = kernel_l2_difference(0.0, delta, 1.0, method="series")
        quadrature = kernel_l2_difference(0.0, delta, 1.0, method="quadrature")
        assert series == pytest.approx(quadrature, rel=1e-6)

    def test_unknown_method(self):
        with pytest.raises(DomainError, match="unknown method"):
            kernel_l2_difference(0.0, 0.5, 1.0, method="spline")
