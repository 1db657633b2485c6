"""Exploration diagnostics: trajectory entropy rate and k-NN state entropy."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma, gammaln

from . import networks as nets

MIN_NEIGHBOR_DIST = 1e-12


def trajectory_entropy_rate(
    states: np.ndarray,
    pi_spec: nets.PolicySpec,
    pi_params,
    mode: str = "gaussian",
    rng: np.random.Generator | None = None,
    n_mc: int = 8,
) -> float:
    """Average per-state action entropy over visited states.

    "gaussian" uses the closed-form entropy of the pre-squash Gaussian,
    0.5*ln(2*pi*e*sigma^2) per dimension; "mc" estimates the entropy of the
    squashed density from n_mc samples per state. The constant initial-state
    entropy term is not included.
    """
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    if states.shape[0] == 0:
        raise ValueError("trajectory_entropy_rate: no states")
    if mode == "gaussian":
        _, log_std = nets.policy_dist_np(pi_spec, pi_params, states)
        per_state = np.sum(0.5 * np.log(2.0 * np.pi * np.e) + log_std, axis=1)
        return float(per_state.mean())
    if mode == "mc":
        if rng is None:
            raise ValueError("mc mode needs an rng")
        n = states.shape[0]
        rep = np.repeat(states, n_mc, axis=0)
        noise = rng.standard_normal((n * n_mc, pi_spec.action_dim))
        _, logp = nets.policy_sample_np(pi_spec, pi_params, rep, noise)
        return float(-logp.mean())
    raise ValueError(f"unknown mode {mode!r}")


def knn_entropy(samples: np.ndarray, k: int = 3) -> float:
    """Kozachenko-Leonenko differential entropy from k-th neighbor distances.

    H = psi(N) - psi(k) + ln(c_d) + (d/N) * sum_i ln r_ik, with c_d the
    d-dimensional unit-ball volume. Distances are floored to avoid log(0)
    on duplicate points.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    n, d = samples.shape
    if k < 1:
        raise ValueError("k must be >= 1")
    if n <= k:
        raise ValueError(f"need more than k={k} samples, got {n}")
    # k-d tree instead of the O(N^2) scan; both are exact
    dists, _ = cKDTree(samples).query(samples, k=k + 1)
    r = np.maximum(dists[:, k], MIN_NEIGHBOR_DIST)
    log_cd = 0.5 * d * np.log(np.pi) - gammaln(0.5 * d + 1.0)
    return float(digamma(n) - digamma(k) + log_cd + d * np.mean(np.log(r)))
