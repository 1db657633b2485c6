"""The tanh-squashed Gaussian policy.

Samples bounded actions, evaluates their log density, and verifies by
quadrature that the density integrates to one over the action interval.
"""

import numpy as np
from scipy.integrate import trapezoid

from metasac import networks as nets


def main():
    rng = np.random.default_rng(1)
    spec = nets.PolicySpec(state_dim=3, action_dim=1, action_bound=0.4, hidden=(16, 16))
    params = nets.init_policy(spec, rng)

    s = rng.standard_normal((5, 3))
    noise = rng.standard_normal((5, 1))
    actions, logp = nets.policy_sample_np(spec, params, s, noise)
    print("sampled actions (all inside +/-0.4):")
    for a, lp in zip(actions[:, 0], logp):
        print(f"  a = {a:+.4f}   log pi(a|s) = {lp:+.4f}")
    assert np.all(np.abs(actions) < spec.action_bound)

    # density of a = b*tanh(u), u ~ N(mu, sigma^2), should integrate to 1
    mu, log_std = nets.policy_dist_np(spec, params, s[:1])
    sigma = np.exp(log_std[0, 0])
    b = spec.action_bound
    a_grid = np.linspace(-b + 1e-9, b - 1e-9, 200_001)
    u = np.arctanh(a_grid / b)
    log_gauss = -0.5 * np.log(2 * np.pi) - np.log(sigma) - 0.5 * ((u - mu[0, 0]) / sigma) ** 2
    log_det = np.log(b) + np.log1p(-(a_grid / b) ** 2)  # d a / d u = b (1 - tanh^2 u)
    density = np.exp(log_gauss - log_det)
    total = trapezoid(density, a_grid)
    print("quadrature of the action density over (-b, b):", total)
    assert abs(total - 1.0) < 1e-3


if __name__ == "__main__":
    main()
