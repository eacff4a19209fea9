"""
Tests for counter-addressed noise streams and slab mixing.
"""

import numpy as np
import pytest

from rdphase.core.exceptions import PreconditionError, UsageError
from rdphase.core.field import TorusGrid
from rdphase.dynamics.noise import (
    MIN_WHITENESS_SLABS,
    NoiseSlab,
    NoiseStream,
    mix_slabs,
    mixing_f,
    mixing_g,
    rng_identity,
    whiteness_test,
)

GRID = TorusGrid(8)


class TestNoiseStream:
    """Test suite for NoiseStream."""

    def test_same_address_same_slab(self):
        a = NoiseStream(7, replica_id=3)
        b = NoiseStream(7, replica_id=3)
        for _ in range(3):
            np.testing.assert_array_equal(a.next_slab(GRID).xi, b.next_slab(GRID).xi)

    def test_slab_n_is_random_access(self):
        """Slab 5 does not depend on having drawn slabs 0..4."""
        sequential = NoiseStream(1, replica_id=0)
        for _ in range(5):
            sequential.next_slab(GRID)
        fifth = sequential.next_slab(GRID).xi
        direct = NoiseStream(1, replica_id=0).generator_at(5).standard_normal(8)
        np.testing.assert_array_equal(fifth, direct)

    def test_skip_matches_drawing(self):
        skipped = NoiseStream(2)
        skipped.skip(4)
        drawn = NoiseStream(2)
        for _ in range(4):
            drawn.next_slab(GRID)
        np.testing.assert_array_equal(skipped.next_slab(GRID).xi, drawn.next_slab(GRID).xi)

    def test_replicas_and_substreams_differ(self):
        base = NoiseStream(7, replica_id=0).next_slab(GRID).xi
        other_replica = NoiseStream(7, replica_id=1).next_slab(GRID).xi
        other_seed = NoiseStream(8, replica_id=0).next_slab(GRID).xi
        spawned = NoiseStream(7, replica_id=0).spawn(1).next_slab(GRID).xi
        for xi in (other_replica, other_seed, spawned):
            assert not np.array_equal(base, xi)

    def test_negative_ids_rejected(self):
        with pytest.raises(UsageError):
            NoiseStream(0, replica_id=-1)

    def test_rng_identity(self):
        identity = rng_identity()
        assert identity["algorithm"] == "numpy.random.Philox"
        assert identity["numpy"] == np.__version__


class TestMixing:
    """Test suite for the mixing weights and mix_slabs."""

    def test_weights_are_orthonormal(self):
        y = np.linspace(-2.0, 2.0, 41)
        np.testing.assert_allclose(mixing_f(y) ** 2 + mixing_g(y) ** 2, 1.0)
        assert mixing_f(0.0) == 0.0
        assert mixing_g(3.0) == 0.0

    def test_pure_weights_select_a_slab(self):
        stream = NoiseStream(3)
        s1, s2 = stream.next_slab(GRID), stream.next_slab(GRID)
        mixed = mix_slabs(s1, s2, np.ones(8), np.zeros(8))
        np.testing.assert_array_equal(mixed.xi, s1.xi)

    def test_weights_must_be_normalised(self):
        stream = NoiseStream(3)
        s1, s2 = stream.next_slab(GRID), stream.next_slab(GRID)
        with pytest.raises(PreconditionError):
            mix_slabs(s1, s2, np.ones(8), np.ones(8))

    def test_grids_must_match(self):
        s1 = NoiseSlab(GRID, np.zeros(8))
        s2 = NoiseSlab(TorusGrid(16), np.zeros(16))
        with pytest.raises(UsageError):
            mix_slabs(s1, s2, np.ones(8), np.zeros(8))


class TestWhiteness:
    """Test suite for whiteness_test."""

    def test_philox_slabs_are_white(self):
        stream = NoiseStream(11)
        slabs = [stream.next_slab(GRID) for _ in range(MIN_WHITENESS_SLABS)]
        report = whiteness_test(slabs)
        assert report.passed
        assert report.tests == 3 * 8 + 28
        assert report.cell_variances[0] == pytest.approx(1.0, abs=0.1)

    def test_correlated_slabs_fail(self):
        stream = NoiseStream(11)
        slabs = []
        for _ in range(MIN_WHITENESS_SLABS):
            xi = stream.next_slab(GRID).xi.copy()
            xi[1] = xi[0]
            slabs.append(NoiseSlab(GRID, xi))
        report = whiteness_test(slabs)
        assert not report.passed
        assert report.max_covariance_z > report.threshold_z

    def test_needs_enough_slabs(self):
        with pytest.raises(UsageError):
            whiteness_test([NoiseSlab(GRID, np.zeros(8))] * 10)
