"""
Tests for stages of the chain embedded in the equation.
"""

import numpy as np
import pytest

from rdphase.chain.embedded import (
    _stage_outcome,
    run_embedded_chain,
    run_embedded_stage,
    sample_stages,
    stage_statistics,
)
from rdphase.chain.models import ChainConfig, StageOutcome, StageResult
from rdphase.core.exceptions import ConfigurationError, DomainError, StageTimeoutError
from rdphase.dynamics.noise import NoiseStream


@pytest.fixture
def quiet_chain(kpp_config):
    """KPP chain (M = -2) with noiseless stages; each one ends UP at t = 2."""
    return ChainConfig(M=-2, solver=kpp_config(lam=0.0), stage_timeout=10.0)


class TestStageOutcome:
    """Test suite for the order in which stage boundaries are checked."""

    def test_down_before_blowout(self):
        assert _stage_outcome(np.array([0.4, 5.0]), 1.0) == StageOutcome.DOWN

    def test_blowout_before_up(self):
        assert _stage_outcome(np.array([2.5, 4.0]), 1.0) == StageOutcome.BLOWOUT

    def test_up(self):
        assert _stage_outcome(np.array([2.0, 3.0]), 1.0) == StageOutcome.UP

    def test_inside(self):
        assert _stage_outcome(np.array([0.6, 3.9]), 1.0) is None


class TestEmbeddedStage:
    """Test suite for run_embedded_stage."""

    def test_noiseless_stage_doubles(self, quiet_chain):
        """w = L(1 + t/2) reaches 2L at t = 2."""
        result = run_embedded_stage(2.0**-4, quiet_chain, NoiseStream(0, 0))
        assert result.outcome == StageOutcome.UP
        assert result.duration == pytest.approx(2.0, abs=2 * quiet_chain.solver.dt)
        assert result.level == 2.0**-4

    def test_timeout_carries_partial_field(self, quiet_chain):
        with pytest.raises(StageTimeoutError) as info:
            run_embedded_stage(2.0**-4, quiet_chain, NoiseStream(0, 0), timeout=1.0)
        assert info.value.elapsed == pytest.approx(1.0)
        assert info.value.partial.shape == (16,)
        assert info.value.exit_code == 3

    def test_needs_solver(self):
        with pytest.raises(ConfigurationError):
            run_embedded_stage(0.1, ChainConfig(M=-2), NoiseStream(0, 0))

    @pytest.mark.parametrize("level", [0.0, -0.1, 0.2])
    def test_level_domain(self, level, quiet_chain):
        with pytest.raises(DomainError):
            run_embedded_stage(level, quiet_chain, NoiseStream(0, 0))


class TestEmbeddedChain:
    """Test suite for run_embedded_chain and stage batches."""

    def test_noiseless_chain_reflects_every_stage(self, quiet_chain):
        record = run_embedded_chain(quiet_chain, 3, NoiseStream(0, 0))
        np.testing.assert_array_equal(record.levels, [-4, -3, -4, -3, -4, -3, -4])
        np.testing.assert_array_equal(record.hits, [1, 2, 3])
        assert list(record.outcomes) == ["up", "reflect"] * 3
        np.testing.assert_allclose(
            record.durations[::2], 2.0, atol=2 * quiet_chain.solver.dt
        )

    def test_needs_stages(self, quiet_chain):
        with pytest.raises(DomainError):
            run_embedded_chain(quiet_chain, 0, NoiseStream(0, 0))

    def test_sample_stages(self, quiet_chain):
        results = sample_stages(2.0**-4, quiet_chain, 3, seed=0, workers=1)
        assert len(results) == 3
        assert all(r.outcome == StageOutcome.UP for r in results)


class TestStageStatistics:
    """Test suite for stage_statistics."""

    def test_summary(self):
        results = [
            StageResult(StageOutcome.UP, 1.0, 0.1),
            StageResult(StageOutcome.UP, 2.0, 0.1),
            StageResult(StageOutcome.DOWN, 0.005, 0.1),
            StageResult(StageOutcome.BLOWOUT, 3.0, 0.1),
        ]
        stats = stage_statistics(results)
        assert stats.stages == 4
        assert stats.p_up == 0.5
        assert stats.outcome_counts == {"up": 2, "down": 1, "blowout": 1}
        assert stats.duration_moments[1] == pytest.approx(6.005 / 4)
        assert stats.floor_frequency == 0.75
        assert stats.tail[0.5] == 0.75
        assert stats.tail[2.0] == 0.25
        assert stats.p_up_ci[0] < 0.5 < stats.p_up_ci[1]

    def test_empty(self):
        with pytest.raises(DomainError):
            stage_statistics([])
