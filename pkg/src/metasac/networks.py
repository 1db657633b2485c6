"""Actor and critic networks on top of the autodiff core.

Parameters live in flat name -> float64 ndarray dicts so they can be fed to
optimizers, hashed, checkpointed, and lifted into graph leaves uniformly.
Each forward pass exists twice: a graph-building version for training and a
plain-numpy version for rollouts and detached targets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import autodiff as ad
from .autodiff import DiffValue

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass
class PolicySpec:
    state_dim: int
    action_dim: int
    action_bound: float
    hidden: tuple[int, ...] = (256, 256)


@dataclass
class QSpec:
    state_dim: int
    action_dim: int
    hidden: tuple[int, ...] = (256, 256)
    twin: bool = True

    @property
    def heads(self) -> tuple[str, ...]:
        return ("q1", "q2") if self.twin else ("q1",)


def _init_layer(rng: np.random.Generator, fan_in: int, fan_out: int, scale: float = 1.0):
    bound = scale / np.sqrt(fan_in)
    W = rng.uniform(-bound, bound, size=(fan_in, fan_out))
    b = np.zeros(fan_out)
    return W, b


def init_mlp(rng, prefix: str, dims: list[int], final_scale: float = 1.0) -> dict[str, np.ndarray]:
    params = {}
    for i, (din, dout) in enumerate(zip(dims[:-1], dims[1:])):
        scale = final_scale if i == len(dims) - 2 else 1.0
        W, b = _init_layer(rng, din, dout, scale)
        params[f"{prefix}.W{i}"] = W
        params[f"{prefix}.b{i}"] = b
    return params


def init_policy(spec: PolicySpec, rng: np.random.Generator) -> dict[str, np.ndarray]:
    dims = [spec.state_dim, *spec.hidden]
    params = init_mlp(rng, "pi.trunk", dims)
    # small heads keep the initial policy near zero mean with moderate spread
    params.update(init_mlp(rng, "pi.mu", [spec.hidden[-1], spec.action_dim], final_scale=1e-2))
    params.update(init_mlp(rng, "pi.logstd", [spec.hidden[-1], spec.action_dim], final_scale=1e-2))
    return params


def init_q(spec: QSpec, rng: np.random.Generator) -> dict[str, np.ndarray]:
    dims = [spec.state_dim + spec.action_dim, *spec.hidden, 1]
    params = {}
    for head in spec.heads:
        params.update(init_mlp(rng, head, dims))
    return params


def _n_layers(params: Mapping, prefix: str) -> int:
    n = 0
    while f"{prefix}.W{n}" in params:
        n += 1
    return n


def mlp_forward(params: Mapping[str, DiffValue], prefix: str, x: DiffValue) -> DiffValue:
    """Affine/relu stack; the last layer is linear."""
    n = _n_layers(params, prefix)
    for i in range(n):
        x = ad.affine(x, params[f"{prefix}.W{i}"], params[f"{prefix}.b{i}"])
        if i < n - 1:
            x = ad.relu(x)
    return x


def mlp_forward_np(params: Mapping[str, np.ndarray], prefix: str, x: np.ndarray) -> np.ndarray:
    n = _n_layers(params, prefix)
    for i in range(n):
        x = x @ params[f"{prefix}.W{i}"] + params[f"{prefix}.b{i}"]
        if i < n - 1:
            x = np.maximum(x, 0.0)
    return x


# ---------------------------------------------------------------------------
# policy


def policy_dist(spec: PolicySpec, p: Mapping[str, DiffValue], s: DiffValue):
    h = ad.relu(mlp_forward(p, "pi.trunk", s))
    mu = mlp_forward(p, "pi.mu", h)
    log_std = ad.clip(mlp_forward(p, "pi.logstd", h), LOG_STD_MIN, LOG_STD_MAX)
    return mu, log_std


def policy_sample(spec: PolicySpec, p: Mapping[str, DiffValue], s: DiffValue, noise: np.ndarray):
    """Reparameterized squashed-Gaussian sample.

    Returns (actions (B, da), log-prob (B,)). The noise is an explicit input
    so gradients flow through mean and std.
    """
    mu, log_std = policy_dist(spec, p, s)
    if not (np.all(np.isfinite(mu.data)) and np.all(np.isfinite(log_std.data))):
        raise FloatingPointError("policy_sample: non-finite mean or log-std")
    std = ad.exp(log_std)
    u = mu + std * noise
    a = spec.action_bound * ad.tanh(u)
    # log N(u; mu, std) with (u - mu)/std == noise held fixed
    gauss = -(HALF_LOG_2PI + 0.5 * noise**2) - log_std
    # log(1 - tanh^2 u) = 2*(log 2 - u - softplus(-2u)), stable for large |u|
    squash = np.log(spec.action_bound) + 2.0 * (np.log(2.0) - u - ad.softplus(-2.0 * u))
    log_prob = ad.vsum(gauss - squash, axis=1)
    return a, log_prob


def policy_deterministic(spec: PolicySpec, p: Mapping[str, DiffValue], s: DiffValue) -> DiffValue:
    mu, _ = policy_dist(spec, p, s)
    return spec.action_bound * ad.tanh(mu)


def policy_dist_np(spec: PolicySpec, p: Mapping[str, np.ndarray], s: np.ndarray):
    h = np.maximum(mlp_forward_np(p, "pi.trunk", s), 0.0)
    mu = mlp_forward_np(p, "pi.mu", h)
    log_std = np.clip(mlp_forward_np(p, "pi.logstd", h), LOG_STD_MIN, LOG_STD_MAX)
    return mu, log_std


def policy_sample_np(spec: PolicySpec, p: Mapping[str, np.ndarray], s: np.ndarray, noise: np.ndarray):
    mu, log_std = policy_dist_np(spec, p, s)
    u = mu + np.exp(log_std) * noise
    a = spec.action_bound * np.tanh(u)
    gauss = -(HALF_LOG_2PI + 0.5 * noise**2) - log_std
    squash = np.log(spec.action_bound) + 2.0 * (np.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))
    return a, np.sum(gauss - squash, axis=1)


def policy_deterministic_np(spec: PolicySpec, p: Mapping[str, np.ndarray], s: np.ndarray):
    mu, _ = policy_dist_np(spec, p, s)
    return spec.action_bound * np.tanh(mu)


# ---------------------------------------------------------------------------
# critics


def q_forward(spec: QSpec, p: Mapping[str, DiffValue], s: DiffValue, a: DiffValue):
    """Per-head Q values, each of shape (B,)."""
    x = ad.concat([s, a], axis=1)
    return tuple(ad.vsum(mlp_forward(p, head, x), axis=1) for head in spec.heads)


def min_q(spec: QSpec, p: Mapping[str, DiffValue], s: DiffValue, a: DiffValue) -> DiffValue:
    qs = q_forward(spec, p, s, a)
    return qs[0] if len(qs) == 1 else ad.minimum(qs[0], qs[1])


def q_forward_np(spec: QSpec, p: Mapping[str, np.ndarray], s: np.ndarray, a: np.ndarray):
    x = np.concatenate([s, a], axis=1)
    return tuple(mlp_forward_np(p, head, x)[:, 0] for head in spec.heads)


def min_q_np(spec: QSpec, p: Mapping[str, np.ndarray], s: np.ndarray, a: np.ndarray):
    qs = q_forward_np(spec, p, s, a)
    return qs[0] if len(qs) == 1 else np.minimum(qs[0], qs[1])


# ---------------------------------------------------------------------------
# target tracking and checkpoints


def polyak_update(target: dict[str, np.ndarray], online: Mapping[str, np.ndarray], tau: float):
    """target <- tau * online + (1 - tau) * target, in place."""
    if set(target) != set(online):
        raise ValueError("polyak_update: parameter sets differ")
    for k, t in target.items():
        if t.shape != online[k].shape:
            raise ValueError(f"polyak_update: shape mismatch for {k}")
        t *= 1.0 - tau
        t += tau * online[k]
    return target


CHECKPOINT_VERSION = 1


def save_checkpoint(path, params: Mapping[str, np.ndarray], meta: dict | None = None):
    """Text checkpoint: one JSON header line, then one line per parameter."""
    header = {
        "format_version": CHECKPOINT_VERSION,
        "meta": meta or {},
        "shapes": {k: list(params[k].shape) for k in sorted(params)},
    }
    with open(path, "w") as f:
        f.write(json.dumps(header) + "\n")
        for k in sorted(params):
            flat = " ".join(repr(float(x)) for x in params[k].ravel())
            f.write(f"{k} {flat}\n")


def load_checkpoint(path):
    with open(path) as f:
        header = json.loads(f.readline())
        if header.get("format_version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version: {header.get('format_version')}")
        params = {}
        for line in f:
            name, *vals = line.split()
            params[name] = np.array([float(v) for v in vals]).reshape(header["shapes"][name])
    return params, header["meta"]
