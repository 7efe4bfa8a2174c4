"""Heuristic URLLC schedulers: Random, Aggressive, TP and TP-lazy.

All four are stateless decision rules over the environment state. They return
an action in {0..F}: 0 holds, f >= 1 transmits the head packet on row f-1.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .env import EnvState, SlicingEnv


def _tp_frequency(residuals: list[int], rng: np.random.Generator) -> int:
    """Row with maximal residual, ties broken uniformly at random."""
    best = max(residuals)
    ties = [f for f, r in enumerate(residuals) if r == best]
    if len(ties) == 1:
        return ties[0]
    return ties[int(rng.integers(len(ties)))]


def random_policy(state: EnvState, rng: np.random.Generator) -> int:
    if state.queue_length == 0:
        return 0
    if rng.random() < 0.5:
        return 0
    return 1 + int(rng.integers(len(state.residuals)))


def aggressive_policy(state: EnvState, rng: np.random.Generator) -> int:
    if state.queue_length == 0:
        return 0
    return 1 + int(rng.integers(len(state.residuals)))


def tp_policy(state: EnvState, rng: np.random.Generator) -> int:
    if state.queue_length == 0:
        return 0
    return 1 + _tp_frequency(state.residuals, rng)


def tp_lazy_policy(state: EnvState, rng: np.random.Generator) -> int:
    """Deadline-driven TP: defer every packet as long as its budget allows.

    The head packet is held while it still has positive slack and is
    transmitted on the TP frequency (maximal residual, random tie-break)
    exactly when waiting one more minislot would break the latency budget.
    Deferring keeps the queue non-empty but never risks a violation, and
    spreads punctures over the later, more-punctured portion of the grid.
    """
    if state.queue_length == 0:
        return 0
    if state.head_slack <= 0:
        return 1 + _tp_frequency(state.residuals, rng)
    return 0


PolicyFn = Callable[[SlicingEnv, np.random.Generator], int]


def make_policy(name: str) -> PolicyFn:
    """Dispatcher from a policy name to a callable acting on a live env."""
    if name == "random":
        return lambda env, rng: random_policy(env.state(), rng)
    if name == "aggressive":
        return lambda env, rng: aggressive_policy(env.state(), rng)
    if name == "tp":
        return lambda env, rng: tp_policy(env.state(), rng)
    if name == "tp-lazy":
        return lambda env, rng: tp_lazy_policy(env.state(), rng)
    raise ValueError(f"unknown policy {name!r}")
