"""Exact finite-horizon solver for tiny instances of the puncturing MDP.

Backward-induction dynamic programming over the full reachable state space
(minislot, waiting-packet arrival times, per-codeword puncture counts). Used
as ground truth for policy quality and reward bookkeeping; refuses anything
beyond toy size.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

from .env import EnvConfig
from .grid import ClassDistribution, Codeword, ResourceGrid

MAX_F = 2
MAX_T = 10
MAX_LATENCY = 3


class OracleSizeError(ValueError):
    """Instance exceeds the exact solver's enumeration limits."""


StateKey = tuple[int, tuple[int, ...], tuple[int, ...]]


def _check_size(config: EnvConfig) -> None:
    if config.F > MAX_F or config.T > MAX_T or config.latency_budget > MAX_LATENCY:
        est = (
            (config.T + 1)
            * 2 ** (config.latency_budget + 2)
            * (config.max_class + 2) ** config.num_codewords
        )
        raise OracleSizeError(
            f"instance too large for exact enumeration (~{est} states); "
            f"limits: F<={MAX_F}, T<={MAX_T}, latency<={MAX_LATENCY}"
        )


@dataclass
class GridSolution:
    """Optimal value and greedy policy table for one fixed placement."""

    value: float
    policy: dict[StateKey, int]
    values: dict[StateKey, float]
    num_states: int


def _initial_states(config: EnvConfig, rho0: tuple[int, ...], pu: float):
    """(probability, queue) pairs after seeding and the t=0 arrival draw."""
    if not config.seed_queue:
        if pu > 0.0:
            yield pu, (0,), rho0
        if pu < 1.0:
            yield 1.0 - pu, (), rho0
        return
    budget = config.latency_budget
    for k in range(budget):
        p_k = 1.0 / budget
        if k > 0:
            # the seed already occupies minislot 0; no extra t=0 draw
            yield p_k, tuple(range(-(k - 1), 1)), rho0
        else:
            if pu > 0.0:
                yield p_k * pu, (0,), rho0
            if pu < 1.0:
                yield p_k * (1.0 - pu), (), rho0


def solve_grid(config: EnvConfig, grid: ResourceGrid, pu: float, gamma: float = 0.99) -> GridSolution:
    """Exact optimal expected discounted return for one fixed grid."""
    _check_size(config)
    T = config.T
    budget = config.latency_budget
    penalty = -3.0 * T / (config.F + 1)
    budgets = tuple(cw.class_budget for cw in grid.codewords)
    row_map = grid.row_map
    values: dict[StateKey, float] = {}
    policy: dict[StateKey, int] = {}

    def value_of(t: int, queue: tuple[int, ...], rho: tuple[int, ...]) -> float:
        key = (t, queue, rho)
        cached = values.get(key)
        if cached is not None:
            return cached
        actions = range(config.F + 1) if queue else (0,)
        best, best_a = -math.inf, 0
        for a in actions:
            if a == 0:
                e_pen = 0.0
                queue_after, rho_after = queue, rho
            else:
                cw_id = row_map[a - 1][t]
                old = rho[cw_id]
                e_pen = -1.0 if old == budgets[cw_id] else 0.0
                capped = min(old + 1, budgets[cw_id] + 1)
                rho_after = rho[:cw_id] + (capped,) + rho[cw_id + 1:]
                queue_after = queue[1:]
            t_next = t + 1
            if t_next >= T:
                total = e_pen
            else:
                total = e_pen
                for p_arr, queue_next in (
                    (pu, queue_after + (t_next,)),
                    (1.0 - pu, queue_after),
                ):
                    if p_arr == 0.0:
                        continue
                    if queue_next and budget - (t_next - queue_next[0]) - 1 < 0:
                        total += p_arr * penalty
                    else:
                        total += p_arr * gamma * value_of(t_next, queue_next, rho_after)
            if total > best:
                best, best_a = total, a
        values[key] = best
        policy[key] = best_a
        return best

    total = 0.0
    rho0 = (0,) * len(budgets)
    for prob, queue, rho in _initial_states(config, rho0, pu):
        total += prob * value_of(0, queue, rho)
    return GridSolution(
        value=total, policy=policy, values=values, num_states=len(values)
    )


def enumerate_states(config: EnvConfig, grid: ResourceGrid, pu: float) -> int:
    """Number of distinct states touched by the exact solve."""
    return solve_grid(config, grid, pu).num_states


def _row_compositions(T: int, parts: int):
    """All compositions of T into `parts` positive parts, with probabilities."""
    if parts == 1:
        yield (T,), 1.0
        return
    total = math.comb(T - 1, parts - 1)
    for cuts in itertools.combinations(range(1, T), parts - 1):
        bounds = (0,) + cuts + (T,)
        yield tuple(b - a for a, b in zip(bounds, bounds[1:])), 1.0 / total


def iter_placements(config: EnvConfig, dist: ClassDistribution):
    """All (grid, probability) pairs under the placement generator's law."""
    per_row = config.num_codewords // config.F
    row_options = []
    for lengths, p_len in _row_compositions(config.T, per_row):
        for classes in itertools.product((0, 1), repeat=per_row):
            p_cls = 1.0
            for c in classes:
                p_cls *= dist.prob_class1 if c == 1 else dist.prob_class0
            if p_cls == 0.0:
                continue
            row_options.append((lengths, classes, p_len * p_cls))
    for combo in itertools.product(row_options, repeat=config.F):
        prob = 1.0
        codewords: list[Codeword] = []
        row_map: list[list[int]] = []
        for f, (lengths, classes, p_row) in enumerate(combo):
            prob *= p_row
            row: list[int] = []
            start = 0
            for length, cls in zip(lengths, classes):
                cw = Codeword(
                    id=len(codewords),
                    frequency=f,
                    start_minislot=start,
                    length=length,
                    class_budget=cls,
                )
                codewords.append(cw)
                row.extend([cw.id] * length)
                start += length
            row_map.append(row)
        yield ResourceGrid(config.F, config.T, codewords, row_map), prob


@dataclass
class OracleSolution:
    value: float
    pu: float
    num_grids: int
    mean_states: float


def optimal_value(config: EnvConfig, gamma: float = 0.99) -> OracleSolution:
    """Expected optimal return, averaged over the random-placement law.

    Requires fixed arrival probability and class distribution so the episode
    law is fully specified.
    """
    _check_size(config)
    if config.fixed_pu is None or config.fixed_dist is None:
        raise ValueError("exact solve requires fixed_pu and fixed_dist")
    total, weight, n_grids, n_states = 0.0, 0.0, 0, 0
    for grid, prob in iter_placements(config, config.fixed_dist):
        sol = solve_grid(config, grid, config.fixed_pu, gamma)
        total += prob * sol.value
        weight += prob
        n_grids += 1
        n_states += sol.num_states
    if abs(weight - 1.0) > 1e-9:
        raise RuntimeError(f"placement probabilities sum to {weight}")
    return OracleSolution(
        value=total, pu=config.fixed_pu, num_grids=n_grids,
        mean_states=n_states / n_grids,
    )


def write_fixture(path, config: EnvConfig, solution: OracleSolution) -> None:
    """Persist the oracle value as a structured text fixture for tests."""
    payload = {
        "F": config.F,
        "T": config.T,
        "latency_budget": config.latency_budget,
        "num_codewords": config.num_codewords,
        "pu": solution.pu,
        "dist": [config.fixed_dist.prob_class0, config.fixed_dist.prob_class1],
        "optimal_value": solution.value,
        "num_grids": solution.num_grids,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
