"""Exploration-entropy diagnostics.

Checks the k-nearest-neighbor entropy estimator on distributions with known
entropy, then evaluates the per-state action entropy of a random policy.
"""

import numpy as np

from metasac import metrics
from metasac import networks as nets


def main():
    rng = np.random.default_rng(3)

    uniform = rng.uniform(0.0, 1.0, size=(50_000, 2))
    normal = rng.standard_normal((50_000, 2))
    print("knn entropy, uniform [0,1]^2:", f"{metrics.knn_entropy(uniform):+.4f}",
          "(true 0)")
    print("knn entropy, standard normal 2d:", f"{metrics.knn_entropy(normal):+.4f}",
          f"(true {np.log(2 * np.pi * np.e):.4f})")

    spec = nets.PolicySpec(3, 2, 1.0, (16, 16))
    params = nets.init_policy(spec, rng)
    states = rng.standard_normal((200, 3))
    h_gauss = metrics.trajectory_entropy_rate(states, spec, params, mode="gaussian")
    h_mc = metrics.trajectory_entropy_rate(states, spec, params, mode="mc", rng=rng)
    print("trajectory entropy rate, gaussian mode:", f"{h_gauss:+.4f}")
    print("trajectory entropy rate, mc mode (8 samples):", f"{h_mc:+.4f}")


if __name__ == "__main__":
    main()
