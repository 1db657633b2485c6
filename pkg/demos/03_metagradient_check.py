"""Metagradient of the temperature, analytic vs. finite differences.

The policy loss is affine in the temperature alpha, so the sensitivity of a
hypothetical RMSProp policy step to alpha has a closed form. This script
compares the analytic d(meta loss)/d(alpha) against a central-difference
oracle that replays the same hypothetical step at alpha +/- h.
"""

import numpy as np

from metasac import metagrad
from metasac import networks as nets


def main():
    rng = np.random.default_rng(7)
    sdim, adim, width, batch = 3, 2, 8, 16
    pi_spec = nets.PolicySpec(sdim, adim, 1.0, (width, width))
    q_spec = nets.QSpec(sdim, adim, (width, width), twin=True)
    pi = nets.init_policy(pi_spec, rng)
    q = nets.init_q(q_spec, rng)

    states = rng.standard_normal((batch, sdim))
    noise = rng.standard_normal((batch, adim))
    s0 = rng.standard_normal((batch, sdim))
    v = {k: rng.uniform(0.0, 0.1, size=p.shape) for k, p in pi.items()}
    alpha = 0.3

    args = (pi_spec, q_spec, pi, q, states, noise, s0, alpha, v, 3e-4, 0.99, 1e-12)
    g = metagrad.meta_alpha_grad(*args)
    for h in (1e-2, 1e-3, 1e-4):
        o = metagrad.meta_alpha_fd_oracle(*args, h=h)
        print(f"h = {h:g}:  analytic = {g:+.10f}  finite-diff = {o:+.10f}  "
              f"|diff| = {abs(g - o):.2e}")


if __name__ == "__main__":
    main()
