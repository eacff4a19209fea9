"""
Tests for the independent/anchored regeneration schedule.
"""

import pytest

from rdphase.core.exceptions import UsageError
from rdphase.core.field import Field
from rdphase.coupling.engine import make_streams
from rdphase.coupling.models import CouplingKind
from rdphase.coupling.regeneration import in_good_set, regeneration_schedule


class TestGoodSet:
    """Test suite for in_good_set."""

    def test_constant_field(self, kpp_config):
        grid = kpp_config().grid
        assert in_good_set(Field.constant(grid, 0.5), c0=0.1, C0=1.0, alpha=0.4)
        assert not in_good_set(Field.constant(grid, 0.05), c0=0.1, C0=1.0, alpha=0.4)

    def test_rough_field_is_excluded(self, kpp_config):
        grid = kpp_config().grid
        rough = Field.from_function(grid, lambda x: 1.0 + 0.5 * (x > 0))
        assert not in_good_set(rough, c0=0.1, C0=0.1, alpha=0.4)


class TestRegenerationSchedule:
    """Test suite for regeneration_schedule."""

    def test_equal_starts(self, kpp_config):
        cfg = kpp_config()
        psi = Field.ones(cfg.grid)
        streams = make_streams(CouplingKind.AM, 0, 0)
        report = regeneration_schedule(
            psi, psi, cfg, streams, t0=0.5, t1=1.0, c0=0.1, C0=1.0
        )
        assert report.merged
        assert report.cycles == 0
        assert report.phases == []

    def test_anchored_phase_merges_deterministic_fields(self, kpp_config):
        cfg = kpp_config(points=8, lam=0.0)
        report = regeneration_schedule(
            Field.constant(cfg.grid, 0.55),
            Field.constant(cfg.grid, 0.5),
            cfg,
            make_streams(CouplingKind.AM, 0, 0),
            t0=0.5,
            t1=30.0,
            c0=0.1,
            C0=10.0,
        )
        assert report.merged
        assert report.cycles == 1
        assert [p.name for p in report.phases] == ["independent", "wait", "anchored"]
        assert report.tau > 0.5

    def test_anchor_hits_survive_later_cycles(self, kpp_config):
        cfg = kpp_config(lam=0.05)
        report = regeneration_schedule(
            Field.constant(cfg.grid, 2.0),
            Field.constant(cfg.grid, 0.5),
            cfg,
            make_streams(CouplingKind.AM, 3, 0),
            t0=0.05,
            t1=0.05,
            c0=0.01,
            C0=1e6,
            max_cycles=2,
        )
        assert not report.merged
        assert report.cycles == 2
        names = [p.name for p in report.phases]
        assert names == ["independent", "wait", "anchored"] * 2
        anchored = [p for p in report.phases if p.name == "anchored"]
        # the upper solution starts on the anchor and follows it exactly
        assert all(p.anchor_hits == [True, False] for p in anchored)
        assert report.anchor_hits == 2
        assert all(p.anchor_hits is None for p in report.phases if p.name != "anchored")

    def test_needs_three_streams(self, kpp_config):
        cfg = kpp_config()
        psi = Field.ones(cfg.grid)
        streams = make_streams(CouplingKind.PM, 0, 0)
        with pytest.raises(UsageError, match="three noise streams"):
            regeneration_schedule(psi, psi, cfg, streams, t0=1, t1=1, c0=0.1, C0=1)

    def test_phase_lengths_must_be_positive(self, kpp_config):
        cfg = kpp_config()
        psi = Field.ones(cfg.grid)
        streams = make_streams(CouplingKind.AM, 0, 0)
        with pytest.raises(UsageError):
            regeneration_schedule(psi, psi, cfg, streams, t0=0, t1=1, c0=0.1, C0=1)
