"""URLLC queue: arrivals, latency accounting, FIFO order, seeding."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slicesim.urllc import UrllcQueue


class TestValidation:
    @pytest.mark.parametrize("p", [-0.1, 1.5])
    def test_bad_probability(self, p):
        with pytest.raises(ValueError):
            UrllcQueue(p, 7)

    def test_bad_budget(self):
        with pytest.raises(ValueError):
            UrllcQueue(0.5, 0)


class TestArrivals:
    def test_bernoulli_rate(self, rng):
        q = UrllcQueue(0.3, 7)
        hits = sum(q.maybe_arrive(t, rng) for t in range(20_000))
        assert hits / 20_000 == pytest.approx(0.3, abs=0.02)

    def test_at_most_one_per_minislot(self, rng):
        q = UrllcQueue(1.0, 7)
        for t in range(10):
            q.maybe_arrive(t, rng)
        arrivals = [p.arrival_minislot for p in q.packets]
        assert arrivals == list(range(10))

    def test_zero_probability_never_arrives(self, rng):
        q = UrllcQueue(0.0, 7)
        assert not any(q.maybe_arrive(t, rng) for t in range(100))
        assert len(q) == 0


class TestLatency:
    def test_head_slack_counts_arrival_minislot(self, rng):
        q = UrllcQueue(1.0, 7)
        q.maybe_arrive(3, rng)
        # the packet can be served in minislots 3..9; minislot 3 already counts
        assert q.head_slack(3) == 6
        assert q.head_slack(9) == 0
        assert q.head_slack(10) == -1

    def test_empty_queue_full_slack(self):
        q = UrllcQueue(0.5, 5)
        assert q.head_slack(123) == 5

    def test_fifo_order_and_pop(self, rng):
        q = UrllcQueue(1.0, 7)
        for t in range(4):
            q.maybe_arrive(t, rng)
        assert len(q) == 4
        assert [q.pop_head().arrival_minislot for _ in range(4)] == [0, 1, 2, 3]
        with pytest.raises(IndexError):
            q.pop_head()

    def test_slack_advances_after_pop(self, rng):
        q = UrllcQueue(1.0, 3)
        q.maybe_arrive(0, rng)
        q.maybe_arrive(2, rng)
        assert q.head_slack(2) == 0
        q.pop_head()
        assert q.head_slack(2) == 2


class TestSeeding:
    def test_seed_range_and_ages(self):
        seen = set()
        for seed in range(300):
            q = UrllcQueue(0.5, 7)
            k = q.seed_initial(np.random.default_rng(seed))
            seen.add(k)
            assert len(q) == k
            if k > 0:
                arrivals = [p.arrival_minislot for p in q.packets]
                assert arrivals == list(range(-(k - 1), 1))
                # a seeded episode never starts in (or forced past) violation
                assert q.head_slack(0) == 7 - k >= 1
        assert seen == set(range(7))

    def test_seed_requires_empty_queue(self, rng):
        q = UrllcQueue(1.0, 7)
        q.maybe_arrive(0, rng)
        with pytest.raises(ValueError):
            q.seed_initial(rng)

    @given(budget=st.integers(1, 10), seed=st.integers(0, 1000))
    @settings(max_examples=50, deadline=None)
    def test_property_seed_within_budget(self, budget, seed):
        q = UrllcQueue(0.5, budget)
        k = q.seed_initial(np.random.default_rng(seed))
        assert 0 <= k < budget
        assert q.head_slack(0) >= 1 if k > 0 else q.head_slack(0) == budget
