"""Heuristic schedulers: legality, distributions, deferral behavior."""

import numpy as np
import pytest

from conftest import make_env, tiny_config
from slicesim.env import EnvState
from slicesim.policies import (
    aggressive_policy,
    make_policy,
    random_policy,
    tp_lazy_policy,
    tp_policy,
)


def state(queue_length=1, head_slack=3, residuals=(1, 0, -1)):
    return EnvState(
        queue_length=queue_length, head_slack=head_slack, residuals=list(residuals)
    )


class TestLegality:
    def test_all_policies_hold_on_empty_queue(self, rng):
        empty = state(queue_length=0)
        assert random_policy(empty, rng) == 0
        assert aggressive_policy(empty, rng) == 0
        assert tp_policy(empty, rng) == 0
        assert tp_lazy_policy(empty, rng) == 0


class TestRandom:
    def test_hold_probability_half_then_uniform(self, rng):
        actions = [random_policy(state(), rng) for _ in range(12_000)]
        actions = np.array(actions)
        assert (actions == 0).mean() == pytest.approx(0.5, abs=0.02)
        for a in (1, 2, 3):
            assert (actions == a).mean() == pytest.approx(0.5 / 3, abs=0.02)


class TestAggressive:
    def test_never_holds_uniform_frequency(self, rng):
        actions = np.array([aggressive_policy(state(), rng) for _ in range(9000)])
        assert (actions == 0).sum() == 0
        for a in (1, 2, 3):
            assert (actions == a).mean() == pytest.approx(1 / 3, abs=0.02)


class TestTp:
    def test_argmax_residual(self, rng):
        assert tp_policy(state(residuals=[1, 0, -1]), rng) == 1
        assert tp_policy(state(residuals=[-1, 0, 1]), rng) == 3

    def test_ties_broken_uniformly(self, rng):
        actions = np.array(
            [tp_policy(state(residuals=[1, 1, 0]), rng) for _ in range(8000)]
        )
        assert set(actions) == {1, 2}
        assert (actions == 1).mean() == pytest.approx(0.5, abs=0.02)

    def test_all_outaged_still_transmits_uniformly(self, rng):
        actions = np.array(
            [tp_policy(state(residuals=[-1, -1, -1]), rng) for _ in range(9000)]
        )
        assert (actions == 0).sum() == 0
        for a in (1, 2, 3):
            assert (actions == a).mean() == pytest.approx(1 / 3, abs=0.03)

    def test_argmax_invariant_to_constant_shift(self, rng):
        base = [1, 0, -1]
        shifted = [r + 5 for r in base]
        for _ in range(50):
            assert tp_policy(state(residuals=base), rng) == 1
            assert tp_policy(state(residuals=shifted), rng) == 1


class TestTpLazy:
    def test_holds_while_slack_positive(self, rng):
        for slack in (1, 2, 7):
            assert tp_lazy_policy(state(head_slack=slack), rng) == 0

    def test_forced_at_zero_slack_uses_tp_rule(self, rng):
        assert tp_lazy_policy(state(head_slack=0, residuals=[0, 1, -1]), rng) == 2

    def test_never_violates_by_construction(self):
        # deadline-driven service keeps every packet within its budget
        for seed in range(30):
            env = make_env(tiny_config(fixed_pu=0.6), seed=seed)
            policy = make_policy("tp-lazy")
            rng = np.random.default_rng(seed)
            env.reset()
            while not env.done:
                result = env.step(policy(env, rng))
                assert not result.info.latency_violated


class TestDispatcher:
    @pytest.mark.parametrize("name", ["random", "aggressive", "tp", "tp-lazy"])
    def test_known_names_run(self, name, rng):
        env = make_env(tiny_config(), seed=5)
        env.reset()
        policy = make_policy(name)
        action = policy(env, rng)
        assert 0 <= action <= env.config.F

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            make_policy("greedy")
