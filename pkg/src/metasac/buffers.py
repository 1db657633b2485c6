"""Off-policy transition storage and the frozen initial-state buffer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Transition:
    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray
    terminal: bool  # true termination only; horizon truncation still bootstraps


@dataclass
class Batch:
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s_next: np.ndarray
    terminal: np.ndarray  # float 0/1

    def __len__(self):
        return self.s.shape[0]


class ReplayBuffer:
    """Ring buffer of transitions with uniform with-replacement sampling."""

    def __init__(self, state_dim: int, action_dim: int, capacity: int = 1_000_000):
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.capacity = capacity
        self.size = 0
        self._cursor = 0
        self._s = np.zeros((capacity, state_dim))
        self._a = np.zeros((capacity, action_dim))
        self._r = np.zeros(capacity)
        self._s2 = np.zeros((capacity, state_dim))
        self._term = np.zeros(capacity)

    def push(self, t: Transition):
        if t.s.shape != (self.state_dim,) or t.s_next.shape != (self.state_dim,):
            raise ValueError(f"push: state dim mismatch, got {t.s.shape}")
        if t.a.shape != (self.action_dim,):
            raise ValueError(f"push: action dim mismatch, got {t.a.shape}")
        i = self._cursor
        self._s[i] = t.s
        self._a[i] = t.a
        self._r[i] = t.r
        self._s2[i] = t.s_next
        self._term[i] = float(t.terminal)
        self._cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _gather(self, idx: np.ndarray) -> Batch:
        return Batch(
            self._s[idx].copy(),
            self._a[idx].copy(),
            self._r[idx].copy(),
            self._s2[idx].copy(),
            self._term[idx].copy(),
        )

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        if self.size < batch_size:
            raise ValueError(f"sample: need {batch_size} transitions, have {self.size}")
        return self._gather(rng.integers(0, self.size, size=batch_size))

    def resample_fresh(self, batch: Batch, rng: np.random.Generator, resample: bool = True) -> Batch:
        """Fresh independent batch for the real updates; the same batch when
        the resampling ablation is off."""
        if not resample:
            return batch
        return self.sample(len(batch), rng)


class InitialStateBuffer:
    """Fixed set of environment initial states, filled once before training."""

    def __init__(self, env, size: int, rng: np.random.Generator):
        self.states = np.stack([env.reset(rng).vec for _ in range(size)])
        self.states.setflags(write=False)

    def __len__(self):
        return self.states.shape[0]

    def sample(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        idx = rng.integers(0, len(self), size=batch_size)
        return self.states[idx]
