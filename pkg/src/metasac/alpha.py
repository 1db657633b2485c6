"""Entropy-temperature strategies: fixed schedule, dual descent, metagradient.

The trained representation is log(alpha), clipped to stay <= 0 so that
0 < alpha <= 1. The metagradient tuner additionally clips the scalar
log-alpha gradient to 0.05 in absolute value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class AlphaState:
    log_alpha: float
    lr: float = 3e-4
    grad_clip: float = 0.05
    log_alpha_max: float = 0.0
    optimizer: str = "sgd"  # "sgd" | "adam"
    # scalar Adam state, used only when optimizer == "adam"
    adam_m: float = 0.0
    adam_v: float = 0.0
    adam_t: int = 0

    @property
    def alpha(self) -> float:
        return math.exp(self.log_alpha)


def _apply_log_grad(state: AlphaState, g_log_alpha: float) -> AlphaState:
    if state.optimizer == "adam":
        state.adam_t += 1
        state.adam_m = 0.9 * state.adam_m + 0.1 * g_log_alpha
        state.adam_v = 0.999 * state.adam_v + 0.001 * g_log_alpha**2
        mhat = state.adam_m / (1.0 - 0.9**state.adam_t)
        vhat = state.adam_v / (1.0 - 0.999**state.adam_t)
        step = state.lr * mhat / (math.sqrt(vhat) + 1e-8)
    else:
        step = state.lr * g_log_alpha
    state.log_alpha = min(state.log_alpha - step, state.log_alpha_max)
    return state


class FixedAlpha:
    """Constant or exponentially decaying temperature schedule."""

    def __init__(self, alpha0: float, decay_rate: float = 0.0):
        if alpha0 <= 0.0:
            raise ValueError(f"alpha must be positive, got {alpha0}")
        self.alpha0 = alpha0
        self.decay_rate = decay_rate

    @classmethod
    def from_endpoints(cls, alpha0: float, alpha_final: float, total_steps: int) -> "FixedAlpha":
        """Decay schedule hitting alpha_final exactly at the last step."""
        return cls(alpha0, math.log(alpha0 / alpha_final) / total_steps)

    def value(self, t: int) -> float:
        return self.alpha0 * math.exp(-self.decay_rate * t)


def dual_update(state: AlphaState, log_probs, target_entropy: float) -> AlphaState:
    """Dual-descent temperature step from a batch of fresh policy log-probs.

    The dual loss is linear in alpha with slope mean(-log pi) - H; descent
    on log(alpha) picks up a chain factor of alpha.
    """
    if len(log_probs) == 0:
        raise ValueError("dual_update: empty batch")
    g_alpha = float(sum(-lp for lp in log_probs) / len(log_probs)) - target_entropy
    return _apply_log_grad(state, state.alpha * g_alpha)


def meta_update(state: AlphaState, meta_grad_alpha: float) -> tuple[AlphaState, float]:
    """Metagradient temperature step; returns the applied (clipped) gradient."""
    g = state.alpha * meta_grad_alpha
    g = max(-state.grad_clip, min(state.grad_clip, g))
    return _apply_log_grad(state, g), g
