"""Soft actor-critic with fixed, dual-descent, and metagradient temperature tuning."""

from . import alpha, autodiff, buffers, envs, harness, metagrad, metrics, networks, sac

__all__ = [
    "alpha",
    "autodiff",
    "buffers",
    "envs",
    "harness",
    "metagrad",
    "metrics",
    "networks",
    "sac",
]

__version__ = "0.1.0"
