"""The URLLC puncturing MDP: state assembly, action application, reward.

One episode covers a coherence interval of T = M * num_slots minislots with a
fixed (randomly generated) codeword placement. Each step the agent either
holds or transmits the head-of-line URLLC packet on one of F frequency rows,
puncturing the eMBB codeword there. Rewards are non-positive: -1 per codeword
newly driven into outage, and -3T/(F+1) when the head packet overstays its
latency budget (which also ends the episode).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import ClassDistribution, ConfigurationError, ResourceGrid, generate_placement
from .urllc import UrllcQueue

DEFAULT_PU_CHOICES = (0.1, 0.2, 0.3, 0.4, 0.5)
DEFAULT_DIST_CHOICES = (
    ClassDistribution(0.0, 1.0),
    ClassDistribution(0.2, 0.8),
    ClassDistribution(0.5, 0.5),
    ClassDistribution(0.8, 0.2),
    ClassDistribution(1.0, 0.0),
)


@dataclass
class EnvConfig:
    F: int = 12
    M: int = 14
    num_slots: int = 10
    latency_budget: int = 7
    num_codewords: int = 120
    max_class: int = 1
    pu_choices: tuple[float, ...] = DEFAULT_PU_CHOICES
    dist_choices: tuple[ClassDistribution, ...] = DEFAULT_DIST_CHOICES
    fixed_pu: float | None = None
    fixed_dist: ClassDistribution | None = None
    # Pre-fill the queue at t=0 with packets of random ages (an exploration
    # aid for training); evaluation runs typically start from an empty queue.
    seed_queue: bool = True

    @property
    def T(self) -> int:
        return self.M * self.num_slots

    def __post_init__(self):
        if self.F <= 0 or self.M <= 0 or self.num_slots <= 0:
            raise ConfigurationError("F, M and slot count must be positive")
        if not 1 <= self.latency_budget < self.T:
            raise ConfigurationError("latency budget must satisfy 1 <= l <= T-1")
        if self.num_codewords % self.F != 0:
            raise ConfigurationError("codeword count must be divisible by F")
        for p in self.pu_choices:
            if not 0.0 <= p <= 1.0:
                raise ConfigurationError(f"invalid arrival probability {p}")
        if self.fixed_pu is not None and not 0.0 <= self.fixed_pu <= 1.0:
            raise ConfigurationError(f"invalid arrival probability {self.fixed_pu}")

    def scaled(self, horizon: int) -> "EnvConfig":
        """Config with the episode stretched to ``horizon`` minislots.

        Codeword count scales proportionally so grid density is unchanged.
        """
        if horizon % self.M != 0:
            raise ConfigurationError("horizon must be a multiple of M")
        factor = horizon // self.T
        if factor * self.T != horizon:
            raise ConfigurationError("horizon must be a multiple of T")
        return EnvConfig(
            F=self.F,
            M=self.M,
            num_slots=self.num_slots * factor,
            latency_budget=self.latency_budget,
            num_codewords=self.num_codewords * factor,
            max_class=self.max_class,
            pu_choices=self.pu_choices,
            dist_choices=self.dist_choices,
            fixed_pu=self.fixed_pu,
            fixed_dist=self.fixed_dist,
            seed_queue=self.seed_queue,
        )


@dataclass
class EnvState:
    queue_length: int
    head_slack: int
    residuals: list[int]


@dataclass
class StepInfo:
    new_outages: int = 0
    latency_violated: bool = False
    packet_served: bool = False


@dataclass
class StepResult:
    state: EnvState
    reward: float
    done: bool
    info: StepInfo = field(default_factory=StepInfo)


def observation_vector(state: EnvState, config: EnvConfig) -> np.ndarray:
    """Normalized NN input: [Q/T, slack/l_max, residuals/max_class]."""
    scale = max(config.max_class, 1)
    obs = np.empty(config.F + 2)
    obs[0] = state.queue_length / config.T
    obs[1] = state.head_slack / config.latency_budget
    obs[2:] = np.asarray(state.residuals, dtype=float) / scale
    return obs


class SlicingEnv:
    """Fully observable episodic environment over one coherence interval."""

    def __init__(
        self,
        config: EnvConfig,
        placement_rng: np.random.Generator,
        arrival_rng: np.random.Generator,
        param_rng: np.random.Generator | None = None,
    ):
        self.config = config
        self._placement_rng = placement_rng
        self._arrival_rng = arrival_rng
        self._param_rng = param_rng if param_rng is not None else placement_rng
        self.grid: ResourceGrid | None = None
        self.queue: UrllcQueue | None = None
        self.t = 0
        self.done = True
        self.pu = 0.0
        self.dist: ClassDistribution | None = None
        self._resid: list[int] = []

    @property
    def T(self) -> int:
        return self.config.T

    def reset(self) -> EnvState:
        cfg = self.config
        if cfg.fixed_pu is not None:
            self.pu = cfg.fixed_pu
        else:
            self.pu = cfg.pu_choices[self._param_rng.integers(len(cfg.pu_choices))]
        if cfg.fixed_dist is not None:
            self.dist = cfg.fixed_dist
        else:
            self.dist = cfg.dist_choices[self._param_rng.integers(len(cfg.dist_choices))]
        self.grid = generate_placement(
            cfg.F, cfg.T, cfg.num_codewords, self.dist, self._placement_rng
        )
        self.queue = UrllcQueue(self.pu, cfg.latency_budget)
        seeded = self.queue.seed_initial(self._arrival_rng) if cfg.seed_queue else 0
        self.t = 0
        self.done = False
        # the seed already occupies minislot 0 unless it was empty; arrivals
        # stay Bernoulli with at most one packet per minislot
        if seeded == 0:
            self.queue.maybe_arrive(0, self._arrival_rng)
        self._resid = self.grid.residual_vector(0)
        return self.state()

    def state(self) -> EnvState:
        return EnvState(
            queue_length=len(self.queue),
            head_slack=self.queue.head_slack(self.t),
            residuals=list(self._resid),
        )

    def legal_actions(self) -> tuple[int, ...]:
        if len(self.queue) == 0:
            return (0,)
        return tuple(range(self.config.F + 1))

    def current_budget_sum(self) -> int:
        return self.grid.budget_sum(self.t)

    def next_budget_sum(self) -> int:
        return self.grid.budget_sum(self.t + 1)

    def observation(self) -> np.ndarray:
        return observation_vector(self.state(), self.config)

    def step(self, action: int) -> StepResult:
        if self.done:
            raise RuntimeError("step() on a finished episode; call reset()")
        if not 0 <= action <= self.config.F:
            raise ValueError(f"action {action} outside {{0..{self.config.F}}}")
        info = StepInfo()
        if action > 0:
            if len(self.queue) == 0:
                raise ValueError("cannot transmit from an empty URLLC queue")
            self.queue.pop_head()
            f = action - 1
            outcome = self.grid.puncture(self.t, f)
            info.packet_served = True
            if outcome.new_outage:
                info.new_outages = 1
            self._resid[f] = max(self._resid[f] - 1, -1)
        reward = float(-info.new_outages)

        self.t += 1
        if self.t >= self.T:
            self.done = True
        else:
            for f, cw_id in self.grid.boundary_changes[self.t]:
                cw = self.grid.codewords[cw_id]
                self._resid[f] = max(cw.class_budget - cw.puncture_count, -1)
            self.queue.maybe_arrive(self.t, self._arrival_rng)
            if self.queue.head_slack(self.t) < 0:
                info.latency_violated = True
                reward += -3.0 * self.T / (self.config.F + 1)
                self.done = True
        return StepResult(state=self.state(), reward=reward, done=self.done, info=info)
