"""Soft actor-critic losses, optimizers, and policy evaluation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from . import autodiff as ad
from . import networks as nets
from .buffers import Batch


@dataclass
class SacHyper:
    gamma: float = 0.99
    tau: float = 0.05
    batch_size: int = 256
    lr_q: float = 3e-4
    lr_pi: float = 3e-4
    start_step: int = 1000

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must be in (0, 1], got {self.tau}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


# ---------------------------------------------------------------------------
# optimizers


class RMSProp:
    """Accumulator rule v <- rho v + (1-rho) g^2; p <- p - lr g / (sqrt(v) + eps)."""

    def __init__(self, lr: float, rho: float = 0.99, eps: float = 1e-12):
        self.lr = lr
        self.rho = rho
        self.eps = eps
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: Mapping[str, np.ndarray]):
        for k, g in grads.items():
            v = self.v.get(k)
            if v is None:
                v = np.zeros_like(params[k])
            v = self.rho * v + (1.0 - self.rho) * g * g
            self.v[k] = v
            params[k] = params[k] - self.lr * g / (np.sqrt(v) + self.eps)
        return params

    def snapshot(self, params: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
        return {k: self.v.get(k, np.zeros_like(p)).copy() for k, p in params.items()}


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: Mapping[str, np.ndarray]):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for k, g in grads.items():
            m = self.m.get(k, np.zeros_like(params[k]))
            v = self.v.get(k, np.zeros_like(params[k]))
            m = b1 * m + (1.0 - b1) * g
            v = b2 * v + (1.0 - b2) * g * g
            self.m[k], self.v[k] = m, v
            mhat = m / (1.0 - b1**self.t)
            vhat = v / (1.0 - b2**self.t)
            params[k] = params[k] - self.lr * mhat / (np.sqrt(vhat) + self.eps)
        return params


def make_optimizer(name: str, lr: float, rho: float = 0.99, eps_rms: float = 1e-12):
    if name == "rmsprop":
        return RMSProp(lr, rho=rho, eps=eps_rms)
    if name == "adam":
        return Adam(lr)
    raise ValueError(f"unknown optimizer {name!r}")


# ---------------------------------------------------------------------------
# losses


def q_target(
    pi_spec: nets.PolicySpec,
    q_spec: nets.QSpec,
    pi: Mapping[str, np.ndarray],
    q_targ: Mapping[str, np.ndarray],
    batch: Batch,
    alpha: float,
    gamma: float,
    rng: np.random.Generator,
    soft: bool = True,
) -> np.ndarray:
    """Per-sample bootstrap targets; plain arrays, so constant by construction.

    With soft=False the entropy correction is dropped (classic Q target).
    """
    noise = rng.standard_normal((len(batch), pi_spec.action_dim))
    a2, logp2 = nets.policy_sample_np(pi_spec, pi, batch.s_next, noise)
    boot = nets.min_q_np(q_spec, q_targ, batch.s_next, a2)
    if soft:
        boot = boot - alpha * logp2
    return batch.r + gamma * (1.0 - batch.terminal) * boot


def q_loss(
    q_spec: nets.QSpec,
    q_params: Mapping[str, np.ndarray],
    batch: Batch,
    y: np.ndarray,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean over batch and heads of 0.5 (Q - y)^2, plus its gradient."""
    leaves = ad.lift(q_params)
    qs = nets.q_forward(q_spec, leaves, ad.DiffValue(batch.s), ad.DiffValue(batch.a))
    per_head = [ad.vmean(0.5 * ad.square(q - y)) for q in qs]
    loss = per_head[0]
    for extra in per_head[1:]:
        loss = loss + extra
    loss = loss / len(per_head)
    grads = ad.backward(loss, leaves)
    return float(loss.data), grads


def policy_loss_graph(
    pi_spec: nets.PolicySpec,
    q_spec: nets.QSpec,
    pi_params: Mapping[str, np.ndarray],
    q_params: Mapping[str, np.ndarray],
    states: np.ndarray,
    noise: np.ndarray,
):
    """Build the two halves of the policy objective on a shared graph.

    Returns (pi leaves, mean log-prob node, mean min-Q node). The critic
    enters as constants, so no gradient reaches its parameters.
    """
    leaves = ad.lift(pi_params)
    q_const = {k: ad.DiffValue(v) for k, v in q_params.items()}
    s = ad.DiffValue(states)
    a, logp = nets.policy_sample(pi_spec, leaves, s, noise)
    qmin = nets.min_q(q_spec, q_const, s, a)
    return leaves, ad.vmean(logp), ad.vmean(qmin)


def policy_loss(
    pi_spec: nets.PolicySpec,
    q_spec: nets.QSpec,
    pi_params: Mapping[str, np.ndarray],
    q_params: Mapping[str, np.ndarray],
    alpha: float,
    states: np.ndarray,
    noise: np.ndarray,
) -> tuple[float, dict[str, np.ndarray], float]:
    """mean(alpha log pi - min Q) and its gradient w.r.t. policy parameters.

    Also returns the batch mean log-prob, which the dual temperature update
    reuses.
    """
    leaves, mean_logp, mean_q = policy_loss_graph(
        pi_spec, q_spec, pi_params, q_params, states, noise
    )
    loss = alpha * mean_logp - mean_q
    grads = ad.backward(loss, leaves)
    return float(loss.data), grads, float(mean_logp.data)


# ---------------------------------------------------------------------------
# evaluation


def rollout(env, policy_fn: Callable[[np.ndarray], np.ndarray], rng: np.random.Generator):
    """One episode; returns (undiscounted return, array of visited states)."""
    state = env.reset(rng)
    total, states, done = 0.0, [state.vec], False
    while not done:
        action = policy_fn(state.vec)
        state, reward, done = env.step(state, action)
        total += reward
        states.append(state.vec)
    return total, np.stack(states[:-1])


def evaluate(
    env,
    pi_spec: nets.PolicySpec,
    pi_params: Mapping[str, np.ndarray],
    n_rollouts: int,
    rng: np.random.Generator,
):
    """Mean/std of undiscounted returns of the deterministic policy.

    Also returns the visited states for the exploration diagnostics.
    """
    if n_rollouts < 1:
        raise ValueError("n_rollouts must be >= 1")

    def act(s):
        return nets.policy_deterministic_np(pi_spec, pi_params, s[None, :])[0]

    returns, all_states = [], []
    for _ in range(n_rollouts):
        ret, states = rollout(env, act, rng)
        returns.append(ret)
        all_states.append(states)
    returns = np.asarray(returns)
    return float(returns.mean()), float(returns.std()), np.concatenate(all_states)
