"""Experiment orchestration: seeded evaluation runs, sweeps, CSV/JSON export.

Heuristic policies are evaluated through the vectorized batch engine by
default (the scalar environment is available for step-level runs and is used
for the PPO agent, which needs network forwards anyway).
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .env import EnvConfig, SlicingEnv, observation_vector
from .fastsim import BatchResult, simulate_batch
from .grid import ClassDistribution
from .policies import PolicyFn, make_policy
from .ppo import PpoAgent, PpoConfig
from .seeding import seed_everything

POLICY_NAMES = ("random", "aggressive", "tp", "tp-lazy", "ppo")


@dataclass
class RunConfig:
    mode: str = "eval"
    env: EnvConfig = field(default_factory=EnvConfig)
    ppo: PpoConfig = field(default_factory=PpoConfig)
    policy: str = "tp"
    episodes: int = 1000
    seed: int = 0
    checkpoint: str | None = None
    init_from: str | None = None
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if self.policy not in POLICY_NAMES:
            raise ValueError(f"unknown policy {self.policy!r}")


@dataclass
class EvalCell:
    policy: str
    pu: float
    dist_label: str
    mean_total_reward: float
    mean_residual_queue: float
    outage_fraction: float
    violation_prob: float
    episodes: int
    seed: int


@dataclass
class EvalSummary:
    cells: list[EvalCell] = field(default_factory=list)


@dataclass
class EpisodeStats:
    total_reward: float
    discounted_return: float
    length: int
    violated: bool
    residual_queue: int
    outage_fraction: float


def run_episode(
    env: SlicingEnv,
    policy_fn: PolicyFn,
    policy_rng: np.random.Generator,
    gamma: float = 0.99,
) -> EpisodeStats:
    """One scalar-environment episode under a named policy callable."""
    env.reset()
    total = 0.0
    discounted = 0.0
    factor = 1.0
    violated = False
    steps = 0
    while not env.done:
        action = policy_fn(env, policy_rng)
        result = env.step(action)
        total += result.reward
        discounted += factor * result.reward
        factor *= gamma
        violated = violated or result.info.latency_violated
        steps += 1
    return EpisodeStats(
        total_reward=total,
        discounted_return=discounted,
        length=steps,
        violated=violated,
        residual_queue=len(env.queue),
        outage_fraction=env.grid.outage_fraction(),
    )


def evaluate_heuristic(
    env_config: EnvConfig,
    policy: str,
    episodes: int,
    rng: np.random.Generator,
    fast: bool = True,
) -> BatchResult:
    """Per-episode metrics for one heuristic at one configuration."""
    if fast:
        return simulate_batch(env_config, policy, episodes, rng)
    policy_fn = make_policy(policy)
    env = SlicingEnv(env_config, placement_rng=rng, arrival_rng=rng, param_rng=rng)
    stats = [run_episode(env, policy_fn, rng) for _ in range(episodes)]
    return BatchResult(
        total_reward=np.array([s.total_reward for s in stats]),
        residual_queue=np.array([s.residual_queue for s in stats]),
        outage_fraction=np.array([s.outage_fraction for s in stats]),
        violated=np.array([s.violated for s in stats]),
        episode_length=np.array([s.length for s in stats]),
    )


def evaluate_agent(
    env_config: EnvConfig,
    agent: PpoAgent,
    episodes: int,
    streams: dict[str, np.random.Generator],
    greedy: bool = True,
    batch_envs: int = 200,
    gamma: float = 0.99,
) -> BatchResult:
    """Lockstep batched evaluation of the learned policy (argmax by default)."""
    F = env_config.F
    obs_dim = F + 2
    total_reward: list[float] = []
    residual_queue: list[int] = []
    outage_fraction: list[float] = []
    violated: list[bool] = []
    episode_length: list[int] = []
    remaining = episodes
    while remaining > 0:
        n = min(batch_envs, remaining)
        remaining -= n
        envs = [
            SlicingEnv(
                env_config,
                placement_rng=streams["placement"],
                arrival_rng=streams["arrivals"],
                param_rng=streams["params"],
            )
            for _ in range(n)
        ]
        for env in envs:
            env.reset()
        rewards = np.zeros(n)
        live = list(range(n))
        obs = np.empty((n, obs_dim))
        masks = np.empty((n, F + 1), dtype=bool)
        while live:
            for j, i in enumerate(live):
                env = envs[i]
                obs[j, 0] = len(env.queue) / env.T
                obs[j, 1] = env.queue.head_slack(env.t) / env_config.latency_budget
                obs[j, 2:] = env._resid
            m = len(live)
            masks[:m] = True
            for j, i in enumerate(live):
                if len(envs[i].queue) == 0:
                    masks[j, 1:] = False
            if greedy:
                from .mlp import forward

                logits = forward(agent.actor, obs[:m])
                actions = np.where(masks[:m], logits, -np.inf).argmax(axis=1)
            else:
                actions, _ = agent.sample_actions(obs[:m], masks[:m], streams["policy"])
            next_live = []
            for j, i in enumerate(live):
                result = envs[i].step(int(actions[j]))
                rewards[i] += result.reward
                if result.done:
                    env = envs[i]
                    total_reward.append(rewards[i])
                    residual_queue.append(len(env.queue))
                    outage_fraction.append(env.grid.outage_fraction())
                    violated.append(result.info.latency_violated)
                    episode_length.append(env.t)
                else:
                    next_live.append(i)
            live = next_live
    return BatchResult(
        total_reward=np.array(total_reward),
        residual_queue=np.array(residual_queue),
        outage_fraction=np.array(outage_fraction),
        violated=np.array(violated),
        episode_length=np.array(episode_length),
    )


def _cell_from_batch(
    batch: BatchResult, policy: str, pu: float, dist_label: str, seed: int
) -> EvalCell:
    return EvalCell(
        policy=policy,
        pu=pu,
        dist_label=dist_label,
        mean_total_reward=float(batch.total_reward.mean()),
        mean_residual_queue=float(batch.residual_queue.mean()),
        outage_fraction=float(batch.outage_fraction.mean()),
        violation_prob=float(batch.violated.mean()),
        episodes=batch.episodes,
        seed=seed,
    )


def _load_agent(config: RunConfig) -> PpoAgent:
    from .mlp import load_checkpoint

    if not config.checkpoint:
        raise ValueError("evaluating the ppo policy requires --checkpoint")
    if not os.path.exists(config.checkpoint):
        raise FileNotFoundError(f"checkpoint not found: {config.checkpoint}")
    streams = seed_everything(config.seed)
    agent = PpoAgent(config.env, streams["init"], hidden=config.ppo.hidden)
    agent.actor, agent.critic = load_checkpoint(config.checkpoint)
    return agent


def run_eval(config: RunConfig) -> EvalSummary:
    """Sweep the arrival probability set; D randomized per episode.

    Evaluation episodes always start from an empty queue: the random queue
    pre-fill is a training-time exploration aid, not part of the measured
    traffic law.
    """
    summary = EvalSummary()
    pu_values = (
        (config.env.fixed_pu,) if config.env.fixed_pu is not None
        else config.env.pu_choices
    )
    agent = _load_agent(config) if config.policy == "ppo" else None
    for i, pu in enumerate(pu_values):
        cell_env = EnvConfig(
            **{**config.env.__dict__, "fixed_pu": pu, "seed_queue": False}
        )
        streams = seed_everything(config.seed + 1000 * i)
        dist_label = (
            config.env.fixed_dist.label if config.env.fixed_dist else "episode-random"
        )
        if agent is not None:
            batch = evaluate_agent(cell_env, agent, config.episodes, streams)
        else:
            batch = evaluate_heuristic(
                cell_env, config.policy, config.episodes, streams["arrivals"]
            )
        summary.cells.append(
            _cell_from_batch(batch, config.policy, pu, dist_label, config.seed)
        )
    return summary


def run_sweep_D(config: RunConfig, pu: float = 0.5) -> EvalSummary:
    """Fix p_u and sweep the class distribution set, one cell per D."""
    summary = EvalSummary()
    agent = _load_agent(config) if config.policy == "ppo" else None
    for i, dist in enumerate(config.env.dist_choices):
        cell_env = EnvConfig(
            **{
                **config.env.__dict__,
                "fixed_pu": pu,
                "fixed_dist": dist,
                "seed_queue": False,
            }
        )
        streams = seed_everything(config.seed + 1000 * i)
        if agent is not None:
            batch = evaluate_agent(cell_env, agent, config.episodes, streams)
        else:
            batch = evaluate_heuristic(
                cell_env, config.policy, config.episodes, streams["arrivals"]
            )
        summary.cells.append(
            _cell_from_batch(batch, config.policy, pu, dist.label, config.seed)
        )
    return summary


CSV_COLUMNS = (
    "policy",
    "p_u",
    "distLabel",
    "meanTotalReward",
    "meanResidualQueue",
    "outageFraction",
    "violationProb",
    "episodes",
    "seed",
)


def _cell_row(cell: EvalCell) -> dict:
    return {
        "policy": cell.policy,
        "p_u": f"{cell.pu:.6g}",
        "distLabel": cell.dist_label,
        "meanTotalReward": f"{cell.mean_total_reward:.8g}",
        "meanResidualQueue": f"{cell.mean_residual_queue:.8g}",
        "outageFraction": f"{cell.outage_fraction:.8g}",
        "violationProb": f"{cell.violation_prob:.8g}",
        "episodes": cell.episodes,
        "seed": cell.seed,
    }


def export(summary: EvalSummary, path: str, fmt: str = "csv") -> None:
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            for cell in summary.cells:
                writer.writerow(_cell_row(cell))
    elif fmt == "json":
        with open(path, "w") as fh:
            json.dump([_cell_row(c) for c in summary.cells], fh, indent=2)
    else:
        raise ValueError(f"unknown export format {fmt!r}")


def load_summary(path: str) -> EvalSummary:
    """Round-trip reader for exported CSV summaries."""
    summary = EvalSummary()
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            summary.cells.append(
                EvalCell(
                    policy=row["policy"],
                    pu=float(row["p_u"]),
                    dist_label=row["distLabel"],
                    mean_total_reward=float(row["meanTotalReward"]),
                    mean_residual_queue=float(row["meanResidualQueue"]),
                    outage_fraction=float(row["outageFraction"]),
                    violation_prob=float(row["violationProb"]),
                    episodes=int(row["episodes"]),
                    seed=int(row["seed"]),
                )
            )
    return summary


def default_out_dir() -> str:
    return os.environ.get("SLICESIM_OUT_DIR", ".")


def write_training_log(path: str, log: list[dict]) -> None:
    from .ppo import TRAIN_LOG_COLUMNS

    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TRAIN_LOG_COLUMNS)
        writer.writeheader()
        for row in log:
            writer.writerow(row)
