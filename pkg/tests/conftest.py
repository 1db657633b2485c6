import numpy as np
import pytest

from metasac import networks as nets


def fd_grad(f, params: dict, h: float = 1e-6) -> dict:
    """Central finite difference of scalar f(params) w.r.t. every entry."""
    grads = {}
    for k, p in params.items():
        g = np.zeros_like(p)
        flat = p.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = f(params)
            flat[i] = orig - h
            fm = f(params)
            flat[i] = orig
            gflat[i] = (fp - fm) / (2.0 * h)
        grads[k] = g
    return grads


def assert_grads_close(got: dict, want: dict, rtol: float):
    """Per-tensor max-norm relative error, the usual gradcheck metric."""
    for k in want:
        err = np.max(np.abs(got[k] - want[k])) / max(np.max(np.abs(want[k])), 1e-8)
        assert err <= rtol, f"{k}: relative error {err:.3e} > {rtol:g}"


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def small_actor_critic(rng, state_dim=3, action_dim=2, width=8, bound=1.0, twin=True):
    pi_spec = nets.PolicySpec(state_dim, action_dim, bound, (width, width))
    q_spec = nets.QSpec(state_dim, action_dim, (width, width), twin=twin)
    return pi_spec, q_spec, nets.init_policy(pi_spec, rng), nets.init_q(q_spec, rng)
