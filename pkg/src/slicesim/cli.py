"""Command-line entry point for training, evaluation, sweeps and oracle checks.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .env import DEFAULT_DIST_CHOICES, EnvConfig
from .grid import ClassDistribution, ConfigurationError
from .harness import (
    POLICY_NAMES,
    RunConfig,
    default_out_dir,
    export,
    run_eval,
    run_sweep_D,
    write_training_log,
)
from .ppo import PpoConfig


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slicesim",
        description="eMBB/URLLC puncturing simulator: schedulers, PPO, exact solver",
    )
    parser.add_argument(
        "--mode",
        choices=("train", "eval", "sweep", "oracle-check"),
        default="eval",
    )
    parser.add_argument("--config", help="JSON config file (flags override it)")
    parser.add_argument("--policy", choices=POLICY_NAMES)
    parser.add_argument("--pu", type=float, help="fix the arrival probability")
    parser.add_argument(
        "--dist",
        help="fix the class distribution as 'p0,p1' (e.g. '0.5,0.5')",
    )
    parser.add_argument("--episodes", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--horizon", type=int, help="episode length T in minislots")
    parser.add_argument("--checkpoint", help="parameter file for the ppo policy")
    parser.add_argument("--out", help="output file path")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--updates", type=int, help="training updates (train mode)")
    parser.add_argument(
        "--init-from",
        help="checkpoint to continue training from (train mode)",
    )
    return parser


def _parse_dist(text: str) -> ClassDistribution:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 2:
        raise ConfigurationError(f"expected 'p0,p1', got {text!r}")
    return ClassDistribution(*parts)


def make_run_config(args: argparse.Namespace) -> RunConfig:
    file_cfg: dict = {}
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)
    env_kwargs = dict(file_cfg.get("env", {}))
    if "dist_choices" in env_kwargs:
        env_kwargs["dist_choices"] = tuple(
            ClassDistribution(*d) for d in env_kwargs["dist_choices"]
        )
    if "fixed_dist" in env_kwargs and env_kwargs["fixed_dist"] is not None:
        env_kwargs["fixed_dist"] = ClassDistribution(*env_kwargs["fixed_dist"])
    if "pu_choices" in env_kwargs:
        env_kwargs["pu_choices"] = tuple(env_kwargs["pu_choices"])
    env = EnvConfig(**env_kwargs)
    if args.horizon is not None:
        env = env.scaled(args.horizon)
    if args.pu is not None:
        env = EnvConfig(**{**env.__dict__, "fixed_pu": args.pu})
    if args.dist is not None:
        env = EnvConfig(**{**env.__dict__, "fixed_dist": _parse_dist(args.dist)})
    ppo_kwargs = dict(file_cfg.get("ppo", {}))
    if "hidden" in ppo_kwargs:
        ppo_kwargs["hidden"] = tuple(ppo_kwargs["hidden"])
    if args.updates is not None:
        ppo_kwargs["total_updates"] = args.updates
    run_kwargs = {
        k: v
        for k, v in file_cfg.items()
        if k
        in ("mode", "policy", "episodes", "seed", "checkpoint", "init_from", "out", "format")
    }
    for name in (
        "mode",
        "policy",
        "episodes",
        "seed",
        "checkpoint",
        "init_from",
        "out",
        "format",
    ):
        value = getattr(args, name)
        if value is not None:
            run_kwargs[name] = value
    run_kwargs.setdefault("seed", 0)
    return RunConfig(env=env, ppo=PpoConfig(**ppo_kwargs), **run_kwargs)


def _out_path(config: RunConfig, stem: str) -> str:
    if config.out:
        return config.out
    ext = "csv" if config.format == "csv" else config.format
    return os.path.join(default_out_dir(), f"{stem}.{ext}")


def _run(config: RunConfig) -> int:
    if config.mode == "train":
        from .mlp import load_checkpoint, save_checkpoint
        from .ppo import PpoAgent, train

        warm = None
        if config.init_from:
            if not os.path.exists(config.init_from):
                raise FileNotFoundError(f"checkpoint not found: {config.init_from}")
            warm = PpoAgent(config.env, np.random.default_rng(0), config.ppo.hidden)
            warm.actor, warm.critic = load_checkpoint(config.init_from)
        agent, log = train(
            config.env, config.ppo, config.seed, progress_every=10, warm_start=warm
        )
        ckpt = config.checkpoint or os.path.join(default_out_dir(), "ppo_checkpoint.npz")
        save_checkpoint(ckpt, agent.actor, agent.critic, meta={"seed": config.seed})
        write_training_log(_out_path(config, "training_log"), log)
        print(f"checkpoint written to {ckpt}")
        return 0
    if config.mode == "eval":
        summary = run_eval(config)
        export(summary, _out_path(config, "eval_summary"), config.format)
        for cell in summary.cells:
            print(
                f"{cell.policy} pu={cell.pu:g} reward={cell.mean_total_reward:.3f} "
                f"queue={cell.mean_residual_queue:.3f} "
                f"outage={cell.outage_fraction:.4f} viol={cell.violation_prob:.4f}"
            )
        return 0
    if config.mode == "sweep":
        summary = run_sweep_D(config)
        export(summary, _out_path(config, "sweep_summary"), config.format)
        for cell in summary.cells:
            print(
                f"{cell.policy} D={cell.dist_label} "
                f"outage={cell.outage_fraction:.4f} reward={cell.mean_total_reward:.3f}"
            )
        return 0
    if config.mode == "oracle-check":
        from .oracle import optimal_value

        if config.env.fixed_pu is None or config.env.fixed_dist is None:
            raise ConfigurationError("oracle-check requires --pu and --dist")
        solution = optimal_value(config.env)
        print(
            f"optimal expected return {solution.value:.6f} "
            f"({solution.num_grids} placements, ~{solution.mean_states:.0f} states each)"
        )
        return 0
    raise ConfigurationError(f"unknown mode {config.mode!r}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = make_run_config(args)
    except (ConfigurationError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    try:
        return _run(config)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
