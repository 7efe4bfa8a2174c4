"""Exact solver: size guards, hand-checkable values, consistency with the
simulated environment on enumerable instances."""

import json

import numpy as np
import pytest

from conftest import build_grid, make_env
from slicesim.env import EnvConfig
from slicesim.grid import ClassDistribution
from slicesim.harness import run_episode
from slicesim.oracle import (
    OracleSizeError,
    iter_placements,
    optimal_value,
    solve_grid,
    write_fixture,
)
from slicesim.policies import make_policy


def micro_config(**overrides):
    kwargs = dict(
        F=1,
        M=1,
        num_slots=2,
        latency_budget=1,
        num_codewords=1,
        fixed_pu=1.0,
        fixed_dist=ClassDistribution(1.0, 0.0),
        seed_queue=False,
    )
    kwargs.update(overrides)
    return EnvConfig(**kwargs)


class TestSizeGuard:
    def test_rejects_default_scale(self):
        with pytest.raises(OracleSizeError):
            optimal_value(EnvConfig(fixed_pu=0.5, fixed_dist=ClassDistribution(0.5, 0.5)))

    def test_requires_fixed_parameters(self):
        cfg = micro_config(fixed_pu=None)
        with pytest.raises(ValueError):
            optimal_value(cfg)


class TestHandSolvable:
    def test_forced_traffic_class0_costs_one_outage(self):
        # T=2, latency 1, p_u=1: both arrivals must be served immediately.
        # The single class-0 codeword outages on the first puncture (-1) and
        # absorbs the second for free; holding instead would cost -3T/(F+1)=-3.
        cfg = micro_config()
        grid = build_grid([[2]], [[0]])
        sol = solve_grid(cfg, grid, pu=1.0, gamma=0.99)
        assert sol.value == pytest.approx(-1.0)

    def test_class1_codeword_absorbs_everything(self):
        # budget 1 absorbs the forced t=0 puncture; the t=1 arrival lands in
        # the final minislot, where holding to the horizon is never penalized
        cfg = micro_config(fixed_dist=ClassDistribution(0.0, 1.0))
        grid = build_grid([[2]], [[1]])
        sol = solve_grid(cfg, grid, pu=1.0, gamma=0.99)
        assert sol.value == pytest.approx(0.0)

    def test_no_traffic_zero_cost(self):
        cfg = micro_config(fixed_pu=0.0)
        grid = build_grid([[2]], [[0]])
        assert solve_grid(cfg, grid, pu=0.0).value == 0.0

    def test_two_rows_avoid_second_outage(self):
        # two class-0 rows: the optimum reuses the already-lost codeword
        cfg = micro_config(F=2, num_codewords=2)
        grid = build_grid([[2], [2]], [[0], [0]])
        sol = solve_grid(cfg, grid, pu=1.0)
        assert sol.value == pytest.approx(-1.0)

    def test_bernoulli_traffic_averages(self):
        # value = p * (best response to an arrival) averaged over both minislots
        cfg = micro_config(fixed_pu=0.5)
        grid = build_grid([[2]], [[0]])
        sol = solve_grid(cfg, grid, pu=0.5)
        # arrival at t=0 (p=.5): must serve immediately, -1. Any t=1 arrival
        # sits in the final minislot and can be held to the horizon for free.
        assert sol.value == pytest.approx(-0.5)


class TestPlacementEnumeration:
    def test_probabilities_sum_to_one(self):
        cfg = micro_config(num_slots=4, num_codewords=2, latency_budget=2)
        total = sum(p for _, p in iter_placements(cfg, ClassDistribution(0.3, 0.7)))
        assert total == pytest.approx(1.0)

    def test_matches_generator_law(self):
        # enumerate lengths x classes for T=4 into 2 parts and compare with
        # the Monte-Carlo frequency of the random generator
        from slicesim.grid import generate_placement

        cfg = micro_config(num_slots=4, num_codewords=2, latency_budget=2)
        dist = ClassDistribution(0.5, 0.5)
        exact = {}
        for grid, p in iter_placements(cfg, dist):
            key = tuple((cw.length, cw.class_budget) for cw in grid.codewords)
            exact[key] = exact.get(key, 0.0) + p
        rng = np.random.default_rng(0)
        counts = {k: 0 for k in exact}
        n = 6000
        for _ in range(n):
            grid = generate_placement(1, 4, 2, dist, rng)
            key = tuple((cw.length, cw.class_budget) for cw in grid.codewords)
            counts[key] += 1
        for key, p in exact.items():
            assert counts[key] / n == pytest.approx(p, abs=0.02)


class TestOptimalValue:
    def test_averaged_value_and_fixture(self, tmp_path):
        cfg = micro_config(
            num_slots=3, fixed_pu=0.5, fixed_dist=ClassDistribution(0.5, 0.5)
        )
        sol = optimal_value(cfg)
        assert sol.num_grids == 2  # one length composition x two class choices
        assert -3.0 < sol.value <= 0.0
        path = tmp_path / "oracle.json"
        write_fixture(path, cfg, sol)
        payload = json.loads(path.read_text())
        assert payload["optimal_value"] == pytest.approx(sol.value)
        assert payload["pu"] == 0.5

    def test_policies_never_beat_oracle(self):
        # simulated mean discounted return of each heuristic <= optimal + 3 sigma
        cfg = EnvConfig(
            F=2,
            M=2,
            num_slots=3,
            latency_budget=3,
            num_codewords=2,
            fixed_pu=0.5,
            fixed_dist=ClassDistribution(0.5, 0.5),
            seed_queue=False,
        )
        sol = optimal_value(cfg)
        for name in ("random", "aggressive", "tp", "tp-lazy"):
            env = make_env(cfg, seed=17)
            policy = make_policy(name)
            rng = np.random.default_rng(23)
            returns = [
                run_episode(env, policy, rng).discounted_return for _ in range(500)
            ]
            mean = float(np.mean(returns))
            sigma = float(np.std(returns)) / np.sqrt(len(returns))
            assert mean <= sol.value + 3 * sigma, (name, mean, sol.value)
