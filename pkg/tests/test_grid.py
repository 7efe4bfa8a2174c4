"""Resource grid: placement law, puncturing, outage accounting."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import build_grid
from slicesim.grid import (
    ClassDistribution,
    ConfigurationError,
    ResourceGrid,
    generate_placement,
)


class TestClassDistribution:
    def test_label(self):
        assert ClassDistribution(0.2, 0.8).label == "[0.2, 0.8]"

    @pytest.mark.parametrize("p0,p1", [(-0.1, 1.1), (0.5, 0.6), (1.2, -0.2)])
    def test_invalid(self, p0, p1):
        with pytest.raises(ConfigurationError):
            ClassDistribution(p0, p1)


class TestGeneratePlacement:
    def test_rows_are_contiguous_partitions(self, rng):
        grid = generate_placement(4, 20, 12, ClassDistribution(0.5, 0.5), rng)
        assert grid.num_codewords == 12
        for f in range(4):
            row = grid.row_map[f]
            assert len(row) == 20
            ids = sorted(set(row))
            assert len(ids) == 3
            # contiguity: each id occupies one run
            runs = [row[0]]
            for a, b in zip(row, row[1:]):
                if b != a:
                    runs.append(b)
            assert runs == ids or len(runs) == len(ids)
            for cw_id in ids:
                cw = grid.codewords[cw_id]
                assert cw.frequency == f
                assert row[cw.start_minislot] == cw_id
                assert row.count(cw_id) == cw.length
                assert cw.length >= 1

    def test_extreme_distributions(self, rng):
        all0 = generate_placement(2, 10, 6, ClassDistribution(1.0, 0.0), rng)
        assert all(cw.class_budget == 0 for cw in all0.codewords)
        all1 = generate_placement(2, 10, 6, ClassDistribution(0.0, 1.0), rng)
        assert all(cw.class_budget == 1 for cw in all1.codewords)

    def test_class_frequency_matches_distribution(self, rng):
        dist = ClassDistribution(0.3, 0.7)
        budgets = []
        for _ in range(200):
            grid = generate_placement(2, 12, 8, dist, rng)
            budgets.extend(cw.class_budget for cw in grid.codewords)
        assert np.mean(budgets) == pytest.approx(0.7, abs=0.05)

    def test_composition_law_is_uniform(self, rng):
        # T=5 split into 2 parts: 4 equally likely compositions
        counts = {}
        for _ in range(4000):
            grid = generate_placement(1, 5, 2, ClassDistribution(1.0, 0.0), rng)
            key = tuple(cw.length for cw in grid.codewords)
            counts[key] = counts.get(key, 0) + 1
        assert set(counts) == {(1, 4), (2, 3), (3, 2), (4, 1)}
        for n in counts.values():
            assert n == pytest.approx(1000, abs=150)

    @pytest.mark.parametrize(
        "F,T,n",
        [(0, 10, 5), (2, 10, 5), (2, 3, 8), (2, 10, 0)],
    )
    def test_invalid_dimensions(self, F, T, n, rng):
        with pytest.raises(ConfigurationError):
            generate_placement(F, T, n, ClassDistribution(0.5, 0.5), rng)

    @given(
        F=st.integers(1, 4),
        per_row=st.integers(1, 5),
        T=st.integers(5, 30),
        seed=st.integers(0, 10_000),
    )
    @settings(max_examples=40, deadline=None)
    def test_property_full_coverage(self, F, per_row, T, seed):
        grid = generate_placement(
            F, T, F * per_row, ClassDistribution(0.5, 0.5), np.random.default_rng(seed)
        )
        lengths = np.array([cw.length for cw in grid.codewords])
        assert lengths.sum() == F * T
        assert (lengths >= 1).all()
        for t in range(T):
            for f in range(F):
                cw = grid.codeword_at(t, f)
                assert cw.start_minislot <= t < cw.start_minislot + cw.length


class TestPuncturing:
    def test_residual_clamps_at_minus_one(self):
        grid = build_grid([[4]], [[1]])
        assert grid.residual(0, 0) == 1
        assert not grid.puncture(0, 0).new_outage
        assert grid.residual(1, 0) == 0
        assert grid.puncture(1, 0).new_outage
        assert grid.residual(2, 0) == -1
        # further punctures stay clamped and are not new outages
        assert not grid.puncture(2, 0).new_outage
        assert grid.residual(3, 0) == -1

    def test_class0_outages_on_first_puncture(self):
        grid = build_grid([[3]], [[0]])
        out = grid.puncture(0, 0)
        assert out.new_outage and out.codeword_id == 0
        assert grid.outage_fraction() == 1.0

    def test_outage_counted_once(self):
        grid = build_grid([[2, 2]], [[0, 1]])
        assert grid.puncture(0, 0).new_outage
        assert not grid.puncture(1, 0).new_outage
        assert grid.outage_fraction() == 0.5

    def test_budget_sum(self):
        grid = build_grid([[2, 2], [4]], [[1, 0], [1]], T=4)
        assert grid.budget_sum(0) == 2  # budgets 1 + 1
        assert grid.budget_sum(2) == 1  # budgets 0 + 1
        grid.puncture(0, 1)
        assert grid.budget_sum(0) == 1
        assert grid.budget_sum(4) == 0  # past the horizon
        assert grid.budget_sum(99) == 0

    def test_residual_vector_and_bounds(self):
        grid = build_grid([[3], [3]], [[1], [0]])
        assert grid.residual_vector(0) == [1, 0]
        with pytest.raises(IndexError):
            grid.codeword_at(3, 0)
        with pytest.raises(IndexError):
            grid.codeword_at(0, 2)

    def test_boundary_changes(self):
        grid = build_grid([[2, 2], [1, 3]], [[1, 1], [0, 0]], T=4)
        assert sorted(grid.boundary_changes[0]) == [(0, 0), (1, 2)]
        assert grid.boundary_changes[1] == [(1, 3)]
        assert grid.boundary_changes[2] == [(0, 1)]
        assert grid.boundary_changes[3] == []

    def test_dataclass_equality_roundtrip(self):
        grid = build_grid([[2, 1]], [[1, 0]])
        assert isinstance(grid, ResourceGrid)
        assert grid.num_codewords == 2
