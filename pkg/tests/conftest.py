"""Shared helpers: hand-built grids and tiny environment configurations."""

from __future__ import annotations

import numpy as np
import pytest

from slicesim.env import EnvConfig, SlicingEnv
from slicesim.grid import ClassDistribution, Codeword, ResourceGrid


def build_grid(lengths_per_row, budgets_per_row, T=None):
    """Construct a ResourceGrid from explicit row partitions.

    ``lengths_per_row[f]`` lists codeword lengths on row f (summing to T);
    ``budgets_per_row[f]`` the matching class budgets.
    """
    F = len(lengths_per_row)
    T = T if T is not None else sum(lengths_per_row[0])
    codewords: list[Codeword] = []
    row_map: list[list[int]] = []
    for f, (lengths, budgets) in enumerate(zip(lengths_per_row, budgets_per_row)):
        assert sum(lengths) == T
        row: list[int] = []
        start = 0
        for length, budget in zip(lengths, budgets):
            cw = Codeword(
                id=len(codewords),
                frequency=f,
                start_minislot=start,
                length=length,
                class_budget=budget,
            )
            codewords.append(cw)
            row.extend([cw.id] * length)
            start += length
        row_map.append(row)
    return ResourceGrid(F=F, T=T, codewords=codewords, row_map=row_map)


def tiny_config(**overrides) -> EnvConfig:
    """Small but non-trivial environment for fast scalar-episode tests."""
    kwargs = dict(
        F=3,
        M=2,
        num_slots=5,
        latency_budget=4,
        num_codewords=6,
        fixed_pu=0.4,
        fixed_dist=ClassDistribution(0.5, 0.5),
    )
    kwargs.update(overrides)
    return EnvConfig(**kwargs)


def make_env(config: EnvConfig, seed: int = 0) -> SlicingEnv:
    rng = np.random.default_rng(seed)
    return SlicingEnv(config, placement_rng=rng, arrival_rng=rng, param_rng=rng)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
