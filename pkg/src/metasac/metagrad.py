"""Metagradient of the temperature through a hypothetical policy update.

The policy objective is affine in the temperature, so the gradient it feeds
to the optimizer splits into an entropy part and a value part. That makes
the derivative of the hypothetically-updated policy parameters w.r.t. the
temperature available in closed form through the RMSProp rule, and the
chain rule finishes the job without any second-order machinery. A central
finite-difference oracle over the same pipeline provides the cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import autodiff as ad
from . import networks as nets
from .sac import policy_loss_graph

ParamDict = dict[str, np.ndarray]


@dataclass
class GradDecomposition:
    """Split of the policy gradient: full grad = alpha * g_entropy + g_value."""

    g_entropy: ParamDict  # grad of mean log-prob
    g_value: ParamDict  # grad of mean(-min Q)


@dataclass
class HypotheticalStep:
    """Updated policy parameters and their sensitivity to the temperature.

    Never written back to the real parameters or optimizer state.
    """

    phi_plus: ParamDict
    dphi_dalpha: ParamDict
    v_next: ParamDict


def decompose_policy_grad(
    pi_spec: nets.PolicySpec,
    q_spec: nets.QSpec,
    pi_params: Mapping[str, np.ndarray],
    q_params: Mapping[str, np.ndarray],
    states: np.ndarray,
    noise: np.ndarray,
) -> GradDecomposition:
    leaves, mean_logp, mean_q = policy_loss_graph(
        pi_spec, q_spec, pi_params, q_params, states, noise
    )
    g_entropy = ad.backward(mean_logp, leaves)
    g_value = ad.backward(-mean_q, leaves)
    return GradDecomposition(g_entropy, g_value)


def rmsprop_step_with_sensitivity(
    pi_params: Mapping[str, np.ndarray],
    dec: GradDecomposition,
    alpha: float,
    v: Mapping[str, np.ndarray],
    lr: float,
    rho: float,
    eps: float,
) -> HypotheticalStep:
    """One RMSProp step plus d(phi+)/d(alpha) by the chain rule.

    With g = alpha*gH + gQ: v' = rho v + (1-rho) g^2 and dv'/dalpha =
    2(1-rho) g gH, so each coordinate of the update differentiates to
    -lr*(gH/(sqrt(v')+eps) - g*(1-rho)*g*gH/(sqrt(v')*(sqrt(v')+eps)^2)).
    """
    phi_plus, dphi, v_next = {}, {}, {}
    for k, p in pi_params.items():
        if np.any(v[k] < 0.0):
            raise ValueError(f"rmsprop accumulator negative for {k}")
        gH, gQ = dec.g_entropy[k], dec.g_value[k]
        g = alpha * gH + gQ
        vk = rho * v[k] + (1.0 - rho) * g * g
        sv = np.sqrt(vk)
        phi_plus[k] = p - lr * g / (sv + eps)
        with np.errstate(divide="ignore", invalid="ignore"):
            curv = np.where(sv > 0.0, (1.0 - rho) * g * g * gH / (sv * (sv + eps) ** 2), 0.0)
        dphi[k] = -lr * (gH / (sv + eps) - curv)
        v_next[k] = vk
    return HypotheticalStep(phi_plus, dphi, v_next)


def sgd_step_with_sensitivity(
    pi_params: Mapping[str, np.ndarray], dec: GradDecomposition, alpha: float, lr: float
) -> HypotheticalStep:
    """Plain-SGD variant of the hypothetical step: dphi/dalpha = -lr * gH."""
    phi_plus = {
        k: p - lr * (alpha * dec.g_entropy[k] + dec.g_value[k]) for k, p in pi_params.items()
    }
    dphi = {k: -lr * dec.g_entropy[k] for k in pi_params}
    return HypotheticalStep(phi_plus, dphi, {})


def meta_loss(
    pi_spec: nets.PolicySpec,
    q_spec: nets.QSpec,
    phi_plus: Mapping[str, np.ndarray],
    q_old: Mapping[str, np.ndarray],
    initial_states: np.ndarray,
) -> tuple[float, ParamDict]:
    """Mean of -min Q_old(s0, det_policy(phi+, s0)) and its grad w.r.t. phi+.

    The critic enters as constants only; no gradient flows into it.
    """
    if initial_states.shape[0] == 0:
        raise ValueError("meta_loss: empty initial-state batch")
    leaves = ad.lift(dict(phi_plus))
    q_const = {k: ad.DiffValue(v) for k, v in q_old.items()}
    s = ad.DiffValue(initial_states)
    a = nets.policy_deterministic(pi_spec, leaves, s)
    loss = ad.vmean(-nets.min_q(q_spec, q_const, s, a))
    return float(loss.data), ad.backward(loss, leaves)


def meta_loss_value(
    pi_spec: nets.PolicySpec,
    q_spec: nets.QSpec,
    phi_plus: Mapping[str, np.ndarray],
    q_old: Mapping[str, np.ndarray],
    initial_states: np.ndarray,
) -> float:
    a = nets.policy_deterministic_np(pi_spec, phi_plus, initial_states)
    return float(-nets.min_q_np(q_spec, q_old, initial_states, a).mean())


def meta_alpha_grad(
    pi_spec: nets.PolicySpec,
    q_spec: nets.QSpec,
    pi_params: Mapping[str, np.ndarray],
    q_params: Mapping[str, np.ndarray],
    states: np.ndarray,
    noise: np.ndarray,
    initial_states: np.ndarray,
    alpha: float,
    v: Mapping[str, np.ndarray],
    lr: float,
    rho: float,
    eps: float,
    q_meta: Mapping[str, np.ndarray] | None = None,
) -> float:
    """Exact d(meta loss)/d(alpha) through the hypothetical RMSProp step.

    `q_meta` lets the meta loss read a different critic (classic-Q ablation)
    than the one defining the policy objective.
    """
    dec = decompose_policy_grad(pi_spec, q_spec, pi_params, q_params, states, noise)
    hyp = rmsprop_step_with_sensitivity(pi_params, dec, alpha, v, lr, rho, eps)
    _, u = meta_loss(
        pi_spec, q_spec, hyp.phi_plus, q_meta if q_meta is not None else q_params, initial_states
    )
    return float(sum(np.sum(u[k] * hyp.dphi_dalpha[k]) for k in u))


def meta_alpha_fd_oracle(
    pi_spec: nets.PolicySpec,
    q_spec: nets.QSpec,
    pi_params: Mapping[str, np.ndarray],
    q_params: Mapping[str, np.ndarray],
    states: np.ndarray,
    noise: np.ndarray,
    initial_states: np.ndarray,
    alpha: float,
    v: Mapping[str, np.ndarray],
    lr: float,
    rho: float,
    eps: float,
    h: float = 1e-4,
    q_meta: Mapping[str, np.ndarray] | None = None,
) -> float:
    """Central finite difference of the full pipeline in alpha.

    Uses the same batch, noise, and accumulator snapshot at both points
    (common random numbers), otherwise the comparison is meaningless.
    """
    if h <= 0.0:
        raise ValueError("h must be positive")
    dec = decompose_policy_grad(pi_spec, q_spec, pi_params, q_params, states, noise)
    q_old = q_meta if q_meta is not None else q_params
    vals = []
    for a in (alpha + h, alpha - h):
        hyp = rmsprop_step_with_sensitivity(pi_params, dec, a, v, lr, rho, eps)
        vals.append(meta_loss_value(pi_spec, q_spec, hyp.phi_plus, q_old, initial_states))
    return (vals[0] - vals[1]) / (2.0 * h)
