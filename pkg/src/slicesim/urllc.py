"""URLLC traffic: Bernoulli arrivals, infinite FIFO queue, latency budget."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class UrllcPacket:
    arrival_minislot: int


class UrllcQueue:
    """FIFO queue of single-minislot URLLC packets.

    A packet's latency counts the minislot it arrived in, so a packet that
    arrived at minislot ``a`` and is still queued at minislot ``t`` has spent
    ``t - a + 1`` minislots in the system.  ``head_slack`` is the number of
    future minislots in which the oldest packet can still be served without
    exceeding the latency budget; an empty queue reports full slack.
    """

    def __init__(self, arrival_prob: float, latency_budget: int):
        if not 0.0 <= arrival_prob <= 1.0:
            raise ValueError("arrival probability must lie in [0, 1]")
        if latency_budget < 1:
            raise ValueError("latency budget must be >= 1")
        self.arrival_prob = arrival_prob
        self.latency_budget = latency_budget
        self._arrivals: list[int] = []  # arrival minislots, FIFO order
        self._head = 0  # index of the oldest unserved packet

    def __len__(self) -> int:
        return len(self._arrivals) - self._head

    @property
    def packets(self) -> list[UrllcPacket]:
        return [UrllcPacket(a) for a in self._arrivals[self._head:]]

    def maybe_arrive(self, t: int, rng: np.random.Generator) -> bool:
        if rng.random() < self.arrival_prob:
            self._arrivals.append(t)
            return True
        return False

    def head_slack(self, t: int) -> int:
        if self._head >= len(self._arrivals):
            return self.latency_budget
        return self.latency_budget - (t - self._arrivals[self._head]) - 1

    def pop_head(self) -> UrllcPacket:
        if self._head >= len(self._arrivals):
            raise IndexError("pop from empty URLLC queue")
        packet = UrllcPacket(self._arrivals[self._head])
        self._head += 1
        return packet

    def seed_initial(self, rng: np.random.Generator) -> int:
        """Pre-fill the queue at t=0 with k packets, k uniform in {0..budget-1}.

        Synthetic arrival times are the k most recent minislots ending at 0,
        so the head has age k-1 and the episode never starts in violation.
        """
        if len(self) != 0:
            raise ValueError("initial seeding requires an empty queue")
        k = int(rng.integers(0, self.latency_budget))
        self._arrivals.extend(range(-(k - 1), 1) if k > 0 else [])
        return k
