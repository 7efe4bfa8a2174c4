"""eMBB resource grid: random codeword placement, puncturing, outage tracking.

The grid is an F x T lattice fully occupied by eMBB codewords. Each codeword
lives on a single frequency row as one contiguous run of minislots and can
absorb up to ``class_budget`` punctures before going into outage. The
per-frequency residual exposed to the scheduler is clamped at -1 once a
codeword is lost.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ConfigurationError(ValueError):
    """Invalid grid/environment dimensions or probabilities."""


@dataclass
class ClassDistribution:
    """Probabilities of assigning puncture budget 0 or 1 to a codeword."""

    prob_class0: float
    prob_class1: float

    def __post_init__(self):
        if not (0.0 <= self.prob_class0 <= 1.0 and 0.0 <= self.prob_class1 <= 1.0):
            raise ConfigurationError("class probabilities must lie in [0, 1]")
        if abs(self.prob_class0 + self.prob_class1 - 1.0) > 1e-9:
            raise ConfigurationError("class probabilities must sum to 1")

    @property
    def label(self) -> str:
        return f"[{self.prob_class0:g}, {self.prob_class1:g}]"


@dataclass
class Codeword:
    id: int
    frequency: int
    start_minislot: int
    length: int
    class_budget: int
    puncture_count: int = 0
    in_outage: bool = False


@dataclass
class PunctureOutcome:
    codeword_id: int
    new_outage: bool


@dataclass
class ResourceGrid:
    """Fully occupied F x T grid of single-row contiguous codewords."""

    F: int
    T: int
    codewords: list[Codeword]
    # row_map[f][t] -> codeword id occupying cell (t, f)
    row_map: list[list[int]]
    # boundary_changes[t] -> [(f, codeword id)] for rows starting a new codeword at t
    boundary_changes: list[list[tuple[int, int]]] = field(repr=False, default_factory=list)

    def __post_init__(self):
        if not self.boundary_changes:
            changes: list[list[tuple[int, int]]] = [[] for _ in range(self.T)]
            for cw in self.codewords:
                changes[cw.start_minislot].append((cw.frequency, cw.id))
            self.boundary_changes = changes

    @property
    def num_codewords(self) -> int:
        return len(self.codewords)

    def codeword_at(self, t: int, f: int) -> Codeword:
        self._check_cell(t, f)
        return self.codewords[self.row_map[f][t]]

    def residual(self, t: int, f: int) -> int:
        """Clamped puncture headroom of the codeword at cell (t, f)."""
        cw = self.codeword_at(t, f)
        return max(cw.class_budget - cw.puncture_count, -1)

    def puncture(self, t: int, f: int) -> PunctureOutcome:
        """Erase cell (t, f); report whether this loses the codeword."""
        cw = self.codeword_at(t, f)
        cw.puncture_count += 1
        new_outage = not cw.in_outage and cw.puncture_count > cw.class_budget
        if new_outage:
            cw.in_outage = True
        return PunctureOutcome(cw.id, new_outage)

    def outage_fraction(self) -> float:
        return sum(cw.in_outage for cw in self.codewords) / len(self.codewords)

    def residual_vector(self, t: int) -> list[int]:
        return [self.residual(t, f) for f in range(self.F)]

    def budget_sum(self, t: int) -> int:
        """Unclamped sum of (budget - punctures) over codewords live at t.

        Past the horizon there is no live minislot; the sum is 0.
        """
        if t >= self.T:
            return 0
        total = 0
        for f in range(self.F):
            cw = self.codewords[self.row_map[f][t]]
            total += cw.class_budget - cw.puncture_count
        return total

    def _check_cell(self, t: int, f: int) -> None:
        if not (0 <= t < self.T and 0 <= f < self.F):
            raise IndexError(f"cell ({t}, {f}) outside {self.F}x{self.T} grid")


def generate_placement(
    F: int,
    T: int,
    num_codewords: int,
    dist: ClassDistribution,
    rng: np.random.Generator,
) -> ResourceGrid:
    """Randomly partition each frequency row into contiguous codewords.

    Each row gets ``num_codewords // F`` codewords whose lengths form a
    uniformly sampled composition of T (minimum part 1). Budgets are drawn
    independently: 1 with probability ``dist.prob_class1``, else 0.
    """
    if F <= 0 or T <= 0 or num_codewords <= 0:
        raise ConfigurationError("F, T and codeword count must be positive")
    if num_codewords % F != 0:
        raise ConfigurationError(
            f"codeword count {num_codewords} not divisible by {F} rows"
        )
    per_row = num_codewords // F
    if per_row > T:
        raise ConfigurationError(f"{per_row} codewords do not fit in {T} minislots")

    codewords: list[Codeword] = []
    row_map: list[list[int]] = []
    for f in range(F):
        if per_row == 1:
            lengths = [T]
        else:
            cuts = rng.choice(T - 1, size=per_row - 1, replace=False) + 1
            cuts.sort()
            bounds = np.concatenate(([0], cuts, [T]))
            lengths = np.diff(bounds).tolist()
        row: list[int] = []
        start = 0
        for length in lengths:
            budget = 1 if rng.random() < dist.prob_class1 else 0
            cw = Codeword(
                id=len(codewords),
                frequency=f,
                start_minislot=start,
                length=int(length),
                class_budget=budget,
            )
            codewords.append(cw)
            row.extend([cw.id] * cw.length)
            start += cw.length
        row_map.append(row)
    return ResourceGrid(F=F, T=T, codewords=codewords, row_map=row_map)
