"""
Tests for replica fan-out.
"""

import time

from rdphase.utils.parallel import default_workers, map_replicas


class TestMapReplicas:
    """Test suite for map_replicas."""

    def test_results_follow_id_order(self):
        def slow_for_small(i):
            time.sleep(0.001 * (5 - i))
            return i * i

        assert map_replicas(slow_for_small, range(5), workers=4) == [0, 1, 4, 9, 16]

    def test_serial_and_threaded_agree(self):
        ids = list(range(10, 20))
        assert map_replicas(str, ids, workers=1) == map_replicas(str, ids, workers=3)

    def test_empty_ids(self):
        assert map_replicas(str, [], workers=2) == []

    def test_default_workers_positive(self):
        assert default_workers() >= 1
