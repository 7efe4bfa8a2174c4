"""Minimal dense network engine: forward, reverse-mode gradients, Adam.

Hidden layers use ReLU; the final layer is affine (logits or a scalar value).
Everything runs in double precision on numpy arrays, batch-first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class TrainingError(RuntimeError):
    """Non-finite gradients or loss during optimization."""


@dataclass
class MlpSpec:
    layer_sizes: tuple[int, ...]

    def __post_init__(self):
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least input and output layers")
        if any(s < 1 for s in self.layer_sizes):
            raise ValueError("layer sizes must be >= 1")


@dataclass
class MlpParams:
    spec: MlpSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def flat(self) -> list[np.ndarray]:
        return self.weights + self.biases


def init_xavier(spec: MlpSpec, rng: np.random.Generator) -> MlpParams:
    """Uniform Xavier weights in +-sqrt(6/(fan_in+fan_out)); zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(spec=spec, weights=weights, biases=biases)


def forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Batch (or single-vector) forward pass; ReLU hidden, affine output."""
    out, _ = forward_cached(params, x)
    return out


def forward_cached(
    params: MlpParams, x: np.ndarray
) -> tuple[np.ndarray, list[np.ndarray]]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    h = x[None, :] if single else x
    if h.shape[1] != params.spec.layer_sizes[0]:
        raise ValueError(
            f"input width {h.shape[1]} != {params.spec.layer_sizes[0]}"
        )
    activations = [h]
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w + b
        if i < last:
            h = np.maximum(h, 0.0)
        activations.append(h)
    return (h[0] if single else h), activations


def backward(
    params: MlpParams,
    activations: list[np.ndarray],
    output_grad: np.ndarray,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradients of sum(output * output_grad) w.r.t. weights and biases."""
    g = np.asarray(output_grad, dtype=float)
    if g.ndim == 1:
        g = g[None, :]
    if g.shape != activations[-1].shape:
        raise ValueError(
            f"output grad shape {g.shape} != {activations[-1].shape}"
        )
    w_grads = [np.empty(0)] * len(params.weights)
    b_grads = [np.empty(0)] * len(params.biases)
    for i in range(len(params.weights) - 1, -1, -1):
        w_grads[i] = activations[i].T @ g
        b_grads[i] = g.sum(axis=0)
        if i > 0:
            g = (g @ params.weights[i].T) * (activations[i] > 0)
    return w_grads, b_grads


@dataclass
class AdamState:
    """Per-parameter first/second moment accumulators with bias correction."""

    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def optimizer_step(
    params: MlpParams,
    w_grads: list[np.ndarray],
    b_grads: list[np.ndarray],
    learning_rate: float,
    state: AdamState,
) -> None:
    """In-place adaptive-moment update (descent direction of the gradients)."""
    grads = w_grads + b_grads
    tensors = params.flat()
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise TrainingError("non-finite gradient encountered")
    if not state.m:
        state.m = [np.zeros_like(p) for p in tensors]
        state.v = [np.zeros_like(p) for p in tensors]
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.step
    bc2 = 1.0 - b2 ** state.step
    for p, g, m, v in zip(tensors, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


CHECKPOINT_VERSION = 1


def save_checkpoint(path, actor: MlpParams, critic: MlpParams, meta: dict | None = None) -> None:
    """Write both networks to an .npz container (version + shapes + arrays)."""
    payload: dict[str, np.ndarray] = {
        "version": np.array(CHECKPOINT_VERSION),
        "actor_sizes": np.array(actor.spec.layer_sizes),
        "critic_sizes": np.array(critic.spec.layer_sizes),
    }
    for name, p in (("actor", actor), ("critic", critic)):
        for i, (w, b) in enumerate(zip(p.weights, p.biases)):
            payload[f"{name}_w{i}"] = w
            payload[f"{name}_b{i}"] = b
    if meta:
        for k, v in meta.items():
            payload[f"meta_{k}"] = np.asarray(v)
    np.savez(path, **payload)


def load_checkpoint(path) -> tuple[MlpParams, MlpParams]:
    with np.load(path) as data:
        if int(data["version"]) != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {int(data['version'])}")
        nets = []
        for name in ("actor", "critic"):
            sizes = tuple(int(s) for s in data[f"{name}_sizes"])
            spec = MlpSpec(sizes)
            weights, biases = [], []
            for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
                w = data[f"{name}_w{i}"]
                b = data[f"{name}_b{i}"]
                if w.shape != (fan_in, fan_out) or b.shape != (fan_out,):
                    raise ValueError(
                        f"{name} layer {i} shape mismatch: {w.shape}, {b.shape}"
                    )
                weights.append(w)
                biases.append(b)
            nets.append(MlpParams(spec=spec, weights=weights, biases=biases))
    return nets[0], nets[1]


def actor_critic_params(
    input_dim: int, num_actions: int, rng: np.random.Generator,
    hidden: tuple[int, ...] = (128, 64, 32),
) -> tuple[MlpParams, MlpParams]:
    """Fresh Xavier-initialized actor (logits) and critic (scalar) networks."""
    actor = init_xavier(MlpSpec((input_dim, *hidden, num_actions)), rng)
    critic = init_xavier(MlpSpec((input_dim, *hidden, 1)), rng)
    return actor, critic
