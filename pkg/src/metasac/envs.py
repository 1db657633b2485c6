"""Desk-scale continuous-control environments.

Both environments have deterministic dynamics and stochastic initial states,
and episodes end only at the horizon (truncation, never true termination).
`dynamics` is a pure function of (state vector, action); `step` additionally
tracks the step counter and the done flag.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EnvSpec:
    state_dim: int
    action_dim: int
    action_bound: float
    horizon: int


@dataclass(frozen=True)
class EnvState:
    vec: np.ndarray
    t: int = 0


class _EnvBase:
    spec: EnvSpec

    def reset(self, rng: np.random.Generator) -> EnvState:
        return EnvState(self._initial(rng), 0)

    def step(self, state: EnvState, action: np.ndarray):
        if not np.all(np.isfinite(state.vec)):
            raise FloatingPointError(f"{self.name}: non-finite state")
        nxt, reward = self.dynamics(state.vec, np.asarray(action, dtype=np.float64))
        t = state.t + 1
        return EnvState(nxt, t), reward, t >= self.spec.horizon


class PointMass2D(_EnvBase):
    """Damped point mass steered toward the origin with a dense cost.

    State (x, y, vx, vy); v' = 0.95 v + 0.1 a, p' = p + 0.1 v';
    reward -|p'| - 0.01 |a|^2.
    """

    name = "pointmass"
    spec = EnvSpec(state_dim=4, action_dim=2, action_bound=1.0, horizon=200)

    def _initial(self, rng):
        return np.concatenate([rng.uniform(-1.0, 1.0, size=2), np.zeros(2)])

    def dynamics(self, state: np.ndarray, action: np.ndarray):
        a = np.clip(action, -self.spec.action_bound, self.spec.action_bound)
        v = 0.95 * state[2:] + 0.1 * a
        p = state[:2] + 0.1 * v
        reward = -np.linalg.norm(p) - 0.01 * float(a @ a)
        return np.concatenate([p, v]), reward


class Pendulum(_EnvBase):
    """Torque-limited pendulum swing-up with gym-style angle cost.

    State (cos th, sin th, thdot); thddot = -10 sin th + 3 a, thdot clipped
    to [-8, 8], dt = 0.05; reward -(wrap(th)^2 + 0.1 thdot^2 + 0.001 a^2).
    """

    name = "pendulum"
    spec = EnvSpec(state_dim=3, action_dim=1, action_bound=2.0, horizon=200)

    def _initial(self, rng):
        th = rng.uniform(-np.pi, np.pi)
        return np.array([np.cos(th), np.sin(th), rng.uniform(-1.0, 1.0)])

    def dynamics(self, state: np.ndarray, action: np.ndarray):
        a = float(np.clip(action, -self.spec.action_bound, self.spec.action_bound)[0])
        th = np.arctan2(state[1], state[0])
        thdot = state[2]
        reward = -(th**2 + 0.1 * thdot**2 + 0.001 * a**2)
        thdot = np.clip(thdot + 0.05 * (-10.0 * np.sin(th) + 3.0 * a), -8.0, 8.0)
        th = th + 0.05 * thdot
        return np.array([np.cos(th), np.sin(th), thdot]), reward


ENVS = {PointMass2D.name: PointMass2D, Pendulum.name: Pendulum}


def make_env(name: str):
    if name not in ENVS:
        raise ValueError(f"unknown environment {name!r}; choose from {sorted(ENVS)}")
    return ENVS[name]()
