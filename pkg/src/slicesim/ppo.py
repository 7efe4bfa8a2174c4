"""PPO-Clip with action masking, GAE, and mean-KL early stopping.

The actor outputs F+1 logits turned into a masked softmax (an empty URLLC
queue leaves action 0 as the only legal move). Policy updates ascend the
clipped surrogate until the sampled mean KL from the behavior policy exceeds
the threshold; the critic regresses onto discounted returns.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .env import EnvConfig, SlicingEnv, observation_vector
from .mlp import (
    AdamState,
    MlpParams,
    TrainingError,
    actor_critic_params,
    backward,
    forward,
    forward_cached,
    optimizer_step,
)
from .seeding import seed_everything


@dataclass
class PpoConfig:
    clip_ratio: float = 0.2
    kl_threshold: float = 1.5e-2
    gamma_return: float = 0.99
    gamma_gae: float = 1.0
    lambda_gae: float = 0.97
    steps_per_update: int = 4200
    policy_iters: int = 80
    value_iters: int = 80
    total_updates: int = 500
    actor_lr: float = 3e-4
    critic_lr: float = 1e-3
    entropy_coef: float = 0.0
    entropy_anneal: bool = True
    normalize_advantages: bool = True
    num_envs: int = 30
    hidden: tuple[int, ...] = (128, 64, 32)

    def __post_init__(self):
        if not 0.0 < self.clip_ratio < 1.0:
            raise ValueError("clip ratio must lie in (0, 1)")
        for g in (self.gamma_return, self.gamma_gae, self.lambda_gae):
            if not 0.0 <= g <= 1.0:
                raise ValueError("discount/decay factors must lie in [0, 1]")
        if min(self.policy_iters, self.value_iters, self.num_envs) < 1:
            raise ValueError("iteration and env counts must be positive")
        if self.entropy_coef < 0.0:
            raise ValueError("entropy coefficient must be non-negative")


def masked_softmax(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Softmax over legal actions only; illegal entries get exactly 0."""
    logits = np.asarray(logits, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    z = np.where(mask, logits, -np.inf)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def masked_log_probs(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    z = np.where(mask, np.asarray(logits, dtype=float), -np.inf)
    zmax = z.max(axis=-1, keepdims=True)
    lse = zmax + np.log(np.exp(z - zmax).sum(axis=-1, keepdims=True))
    return z - lse


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    bootstrap_value: float,
    gamma: float,
    lam: float,
) -> np.ndarray:
    """Advantages for one episode segment (backward recursion over TD residuals)."""
    rewards = np.asarray(rewards, dtype=float)
    if rewards.size == 0:
        raise ValueError("empty trajectory segment")
    next_values = np.append(np.asarray(values, dtype=float)[1:], bootstrap_value)
    deltas = rewards + gamma * next_values - values
    adv = np.empty_like(deltas)
    acc = 0.0
    for i in range(len(deltas) - 1, -1, -1):
        acc = deltas[i] + gamma * lam * acc
        adv[i] = acc
    return adv


def discounted_returns(
    rewards: np.ndarray, gamma: float, bootstrap_value: float = 0.0
) -> np.ndarray:
    """Backward-accumulated discounted reward sums for one segment."""
    rewards = np.asarray(rewards, dtype=float)
    out = np.empty_like(rewards)
    acc = bootstrap_value
    for i in range(len(rewards) - 1, -1, -1):
        acc = rewards[i] + gamma * acc
        out[i] = acc
    return out


@dataclass
class EpisodeSegment:
    """Per-step records of one completed episode."""

    obs: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    rewards: np.ndarray
    values: np.ndarray
    masks: np.ndarray
    terminated: bool  # True: latency violation; False: horizon truncation
    bootstrap_value: float

    @property
    def total_reward(self) -> float:
        return float(self.rewards.sum())

    def __len__(self) -> int:
        return len(self.actions)


@dataclass
class RolloutBatch:
    segments: list[EpisodeSegment]
    obs: np.ndarray = field(init=False)
    actions: np.ndarray = field(init=False)
    log_probs: np.ndarray = field(init=False)
    masks: np.ndarray = field(init=False)
    advantages: np.ndarray = field(init=False)
    returns: np.ndarray = field(init=False)

    def finalize(self, cfg: PpoConfig) -> None:
        self.obs = np.concatenate([s.obs for s in self.segments])
        self.actions = np.concatenate([s.actions for s in self.segments])
        self.log_probs = np.concatenate([s.log_probs for s in self.segments])
        self.masks = np.concatenate([s.masks for s in self.segments])
        self.advantages = np.concatenate(
            [
                compute_gae(
                    s.rewards, s.values, s.bootstrap_value, cfg.gamma_gae, cfg.lambda_gae
                )
                for s in self.segments
            ]
        )
        self.returns = np.concatenate(
            [
                discounted_returns(
                    s.rewards,
                    cfg.gamma_return,
                    0.0 if s.terminated else s.bootstrap_value,
                )
                for s in self.segments
            ]
        )
        if cfg.normalize_advantages:
            std = self.advantages.std()
            self.advantages = (self.advantages - self.advantages.mean()) / (std + 1e-8)

    def __len__(self) -> int:
        return len(self.actions)


class PpoAgent:
    """Actor/critic parameter pair plus action selection helpers."""

    def __init__(
        self,
        env_config: EnvConfig,
        init_rng: np.random.Generator,
        hidden: tuple[int, ...] = (128, 64, 32),
    ):
        self.env_config = env_config
        self.num_actions = env_config.F + 1
        self.actor, self.critic = actor_critic_params(
            env_config.F + 2, self.num_actions, init_rng, hidden
        )

    def action_mask(self, queue_length: int) -> np.ndarray:
        mask = np.ones(self.num_actions, dtype=bool)
        if queue_length == 0:
            mask[1:] = False
        return mask

    def values(self, obs: np.ndarray) -> np.ndarray:
        return forward(self.critic, obs)[..., 0]

    def sample_actions(
        self, obs: np.ndarray, masks: np.ndarray, rng: np.random.Generator
    ) -> tuple[np.ndarray, np.ndarray]:
        """Sample one action per row; returns (actions, log-probabilities)."""
        probs = masked_softmax(forward(self.actor, obs), masks)
        u = rng.random(len(probs))
        actions = (probs.cumsum(axis=1) > u[:, None]).argmax(axis=1)
        logp = np.log(probs[np.arange(len(probs)), actions])
        return actions, logp

    def greedy_action(self, obs: np.ndarray, mask: np.ndarray) -> int:
        logits = forward(self.actor, obs)
        return int(np.where(mask, logits, -np.inf).argmax())


def collect_rollouts(
    envs: list[SlicingEnv],
    agent: PpoAgent,
    cfg: PpoConfig,
    policy_rng: np.random.Generator,
) -> RolloutBatch:
    """Run envs in lockstep until >= steps_per_update transitions are banked.

    Only whole episodes are collected: once the quota is met, running
    episodes finish but no new ones start.
    """
    segments: list[EpisodeSegment] = []
    banked = 0

    class _Live:
        __slots__ = ("env", "obs", "actions", "logps", "rewards", "values", "masks")

        def __init__(self, env: SlicingEnv):
            self.env = env
            env.reset()
            self.obs, self.actions, self.logps = [], [], []
            self.rewards, self.values, self.masks = [], [], []

    live = [_Live(env) for env in envs]
    while live:
        obs = np.array([observation_vector(l.env.state(), l.env.config) for l in live])
        masks = np.array([agent.action_mask(len(l.env.queue)) for l in live])
        actions, logps = agent.sample_actions(obs, masks, policy_rng)
        values = agent.values(obs)
        finished: list[_Live] = []
        for i, l in enumerate(live):
            result = l.env.step(int(actions[i]))
            l.obs.append(obs[i])
            l.actions.append(int(actions[i]))
            l.logps.append(logps[i])
            l.rewards.append(result.reward)
            l.values.append(values[i])
            l.masks.append(masks[i])
            if result.done:
                finished.append(l)
        for l in finished:
            terminated = l.env.t < l.env.T
            bootstrap = 0.0
            if not terminated:
                bootstrap = float(agent.values(l.env.observation()))
            segments.append(
                EpisodeSegment(
                    obs=np.array(l.obs),
                    actions=np.array(l.actions),
                    log_probs=np.array(l.logps),
                    rewards=np.array(l.rewards),
                    values=np.array(l.values, dtype=float),
                    masks=np.array(l.masks),
                    terminated=terminated,
                    bootstrap_value=bootstrap,
                )
            )
            banked += len(l.actions)
            if banked < cfg.steps_per_update:
                live.append(_Live(l.env))
            live.remove(l)
    batch = RolloutBatch(segments)
    batch.finalize(cfg)
    return batch


def surrogate_objective(
    new_logp: np.ndarray, old_logp: np.ndarray, adv: np.ndarray, clip_ratio: float
) -> float:
    ratio = np.exp(new_logp - old_logp)
    clipped = np.clip(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio)
    return float(np.mean(np.minimum(ratio * adv, clipped * adv)))


def policy_update(
    batch: RolloutBatch,
    agent: PpoAgent,
    cfg: PpoConfig,
    adam: AdamState,
    entropy_coef: float | None = None,
) -> tuple[float, int]:
    """Ascend the clipped surrogate; stop once mean KL exceeds the threshold.

    ``entropy_coef`` overrides ``cfg.entropy_coef`` (used for annealing
    schedules). Returns (final mean KL estimate, number of passes applied).
    """
    ent_coef = cfg.entropy_coef if entropy_coef is None else entropy_coef
    n = len(batch)
    rows = np.arange(n)
    applied = 0
    mean_kl = 0.0
    for _ in range(cfg.policy_iters):
        logits, cache = forward_cached(agent.actor, batch.obs)
        logp_all = masked_log_probs(logits, batch.masks)
        new_logp = logp_all[rows, batch.actions]
        mean_kl = float(np.mean(batch.log_probs - new_logp))
        if mean_kl > cfg.kl_threshold:
            break
        ratio = np.exp(new_logp - batch.log_probs)
        adv = batch.advantages
        clipped_out = ((adv >= 0) & (ratio > 1.0 + cfg.clip_ratio)) | (
            (adv < 0) & (ratio < 1.0 - cfg.clip_ratio)
        )
        coef = np.where(clipped_out, 0.0, ratio * adv)
        probs = np.where(batch.masks, np.exp(logp_all), 0.0)
        dlogits = -coef[:, None] * (np.eye(agent.num_actions)[batch.actions] - probs) / n
        if ent_coef > 0.0:
            # Entropy bonus keeps action probabilities off the 0/1 boundary so
            # deterministic mistakes stay visible to on-policy sampling.
            # dH/dz_k = -p_k (log p_k + H); masked actions have p_k = 0.
            plogp = probs * np.where(batch.masks, logp_all, 0.0)
            entropy = -plogp.sum(axis=1, keepdims=True)
            dlogits += ent_coef * (plogp + probs * entropy) / n
        if not np.all(np.isfinite(dlogits)):
            raise TrainingError("non-finite policy gradient")
        w_grads, b_grads = backward(agent.actor, cache, dlogits)
        optimizer_step(agent.actor, w_grads, b_grads, cfg.actor_lr, adam)
        applied += 1
    return mean_kl, applied


def value_update(
    batch: RolloutBatch,
    agent: PpoAgent,
    cfg: PpoConfig,
    adam: AdamState,
) -> float:
    """Mean-squared-error regression of the critic onto discounted returns."""
    n = len(batch)
    loss = 0.0
    for _ in range(cfg.value_iters):
        pred, cache = forward_cached(agent.critic, batch.obs)
        err = pred[:, 0] - batch.returns
        loss = float(np.mean(err**2))
        if not np.isfinite(loss):
            raise TrainingError("non-finite value loss")
        w_grads, b_grads = backward(agent.critic, cache, (2.0 * err / n)[:, None])
        optimizer_step(agent.critic, w_grads, b_grads, cfg.critic_lr, adam)
    return loss


TRAIN_LOG_COLUMNS = (
    "update",
    "meanEpReward",
    "meanEpLength",
    "meanKL",
    "stopIter",
    "valueLoss",
    "wallClockSeconds",
)


def train(
    env_config: EnvConfig,
    ppo_config: PpoConfig,
    seed: int,
    progress_every: int = 0,
    warm_start: PpoAgent | None = None,
) -> tuple[PpoAgent, list[dict]]:
    """Full training loop: alternate rollout collection and PPO updates.

    ``warm_start`` continues training from an existing agent's parameters
    (e.g. a loaded checkpoint) instead of a fresh initialization.
    """
    streams = seed_everything(seed)
    agent = PpoAgent(env_config, streams["init"], ppo_config.hidden)
    if warm_start is not None:
        agent.actor, agent.critic = warm_start.actor, warm_start.critic
    envs = [
        SlicingEnv(
            env_config,
            placement_rng=streams["placement"],
            arrival_rng=streams["arrivals"],
            param_rng=streams["params"],
        )
        for _ in range(ppo_config.num_envs)
    ]
    actor_adam, critic_adam = AdamState(), AdamState()
    log: list[dict] = []
    start = time.monotonic()
    for update in range(ppo_config.total_updates):
        batch = collect_rollouts(envs, agent, ppo_config, streams["policy"])
        ent_coef = ppo_config.entropy_coef
        if ppo_config.entropy_anneal:
            # linear decay to zero so the final policy is sharp
            ent_coef *= 1.0 - update / ppo_config.total_updates
        mean_kl, stop_iter = policy_update(
            batch, agent, ppo_config, actor_adam, entropy_coef=ent_coef
        )
        value_loss = value_update(batch, agent, ppo_config, critic_adam)
        row = {
            "update": update,
            "meanEpReward": float(np.mean([s.total_reward for s in batch.segments])),
            "meanEpLength": float(np.mean([len(s) for s in batch.segments])),
            "meanKL": mean_kl,
            "stopIter": stop_iter,
            "valueLoss": value_loss,
            "wallClockSeconds": time.monotonic() - start,
        }
        log.append(row)
        if progress_every and (update + 1) % progress_every == 0:
            print(
                f"update {update + 1}/{ppo_config.total_updates} "
                f"reward {row['meanEpReward']:.2f} kl {mean_kl:.4f} "
                f"stop {stop_iter} vloss {value_loss:.3f}",
                flush=True,
            )
    return agent, log
