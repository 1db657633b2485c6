import hashlib

import numpy as np
import pytest

from metasac import metagrad, sac
from metasac import networks as nets

from conftest import small_actor_critic


def _instance(rng, width=8, batch=6, sdim=3, adim=2):
    pi_spec, q_spec, pi, q = small_actor_critic(rng, sdim, adim, width)
    states = rng.standard_normal((batch, sdim))
    noise = rng.standard_normal((batch, adim))
    s0 = rng.standard_normal((batch, sdim))
    v = {k: rng.uniform(0.0, 0.1, size=p.shape) for k, p in pi.items()}
    return pi_spec, q_spec, pi, q, states, noise, s0, v


def _hash(params):
    h = hashlib.sha256()
    for k in sorted(params):
        h.update(params[k].tobytes())
    return h.hexdigest()


def test_decomposition_reconstructs_policy_gradient(rng):
    pi_spec, q_spec, pi, q, states, noise, _, _ = _instance(rng)
    dec = metagrad.decompose_policy_grad(pi_spec, q_spec, pi, q, states, noise)
    alpha = 0.37
    _, direct, _ = sac.policy_loss(pi_spec, q_spec, pi, q, alpha, states, noise)
    for k in pi:
        recon = alpha * dec.g_entropy[k] + dec.g_value[k]
        err = np.max(np.abs(recon - direct[k])) / max(np.max(np.abs(direct[k])), 1e-12)
        assert err <= 1e-12, k


def test_alpha_zero_gradient_is_value_term(rng):
    pi_spec, q_spec, pi, q, states, noise, _, _ = _instance(rng)
    dec = metagrad.decompose_policy_grad(pi_spec, q_spec, pi, q, states, noise)
    _, direct, _ = sac.policy_loss(pi_spec, q_spec, pi, q, 0.0, states, noise)
    for k in pi:
        assert np.allclose(dec.g_value[k], direct[k], rtol=0, atol=1e-14)


def test_entropy_gradient_independent_of_critic(rng):
    pi_spec, q_spec, pi, q, states, noise, _, _ = _instance(rng)
    dec1 = metagrad.decompose_policy_grad(pi_spec, q_spec, pi, q, states, noise)
    q2 = {k: v + rng.standard_normal(v.shape) for k, v in q.items()}
    dec2 = metagrad.decompose_policy_grad(pi_spec, q_spec, pi, q2, states, noise)
    for k in pi:
        assert np.array_equal(dec1.g_entropy[k], dec2.g_entropy[k])


def test_rmsprop_sensitivity_scalar_example():
    params = {"p": np.array([0.0])}
    dec = metagrad.GradDecomposition({"p": np.array([2.0])}, {"p": np.array([1.0])})
    hyp = metagrad.rmsprop_step_with_sensitivity(
        params, dec, alpha=0.5, v={"p": np.array([1.0])}, lr=0.1, rho=0.9, eps=1e-12
    )
    assert abs(hyp.phi_plus["p"][0] - (-0.175412)) < 1e-6
    assert abs(hyp.dphi_dalpha["p"][0] - (-0.121439)) < 1e-6
    # central finite difference in alpha, h = 1e-5
    h = 1e-5
    outs = []
    for a in (0.5 + h, 0.5 - h):
        g = a * 2.0 + 1.0
        vp = 0.9 * 1.0 + 0.1 * g * g
        outs.append(-0.1 * g / (np.sqrt(vp) + 1e-12))
    assert abs(hyp.dphi_dalpha["p"][0] - (outs[0] - outs[1]) / (2 * h)) < 1e-8


def test_zero_entropy_gradient_zero_sensitivity(rng):
    pi_spec, q_spec, pi, q, states, noise, _, v = _instance(rng)
    dec = metagrad.decompose_policy_grad(pi_spec, q_spec, pi, q, states, noise)
    dec = metagrad.GradDecomposition(
        {k: np.zeros_like(g) for k, g in dec.g_entropy.items()}, dec.g_value
    )
    hyp = metagrad.rmsprop_step_with_sensitivity(pi, dec, 0.5, v, 3e-4, 0.99, 1e-12)
    assert all(np.all(d == 0.0) for d in hyp.dphi_dalpha.values())


def test_rmsprop_sensitivity_rejects_negative_accumulator(rng):
    pi_spec, q_spec, pi, q, states, noise, _, v = _instance(rng)
    dec = metagrad.decompose_policy_grad(pi_spec, q_spec, pi, q, states, noise)
    bad = {k: a.copy() for k, a in v.items()}
    key = next(iter(bad))
    bad[key].flat[0] = -1e-3
    with pytest.raises(ValueError, match="negative"):
        metagrad.rmsprop_step_with_sensitivity(pi, dec, 0.5, bad, 3e-4, 0.99, 1e-12)


def test_full_vector_sensitivity_matches_fd(rng):
    pi_spec, q_spec, pi, q, states, noise, _, v = _instance(rng)
    dec = metagrad.decompose_policy_grad(pi_spec, q_spec, pi, q, states, noise)
    alpha, h = 0.4, 1e-5
    hyp = metagrad.rmsprop_step_with_sensitivity(pi, dec, alpha, v, 3e-4, 0.99, 1e-12)
    up = metagrad.rmsprop_step_with_sensitivity(pi, dec, alpha + h, v, 3e-4, 0.99, 1e-12)
    dn = metagrad.rmsprop_step_with_sensitivity(pi, dec, alpha - h, v, 3e-4, 0.99, 1e-12)
    for k in pi:
        fd = (up.phi_plus[k] - dn.phi_plus[k]) / (2 * h)
        err = np.max(np.abs(hyp.dphi_dalpha[k] - fd)) / max(np.max(np.abs(fd)), 1e-12)
        assert err <= 1e-5, k


def test_meta_loss_constant_critic(rng):
    pi_spec, q_spec, pi, q, _, _, s0, _ = _instance(rng)
    q_const = {k: np.zeros_like(v) for k, v in q.items()}
    q_const["q1.b2"] = np.array([4.2])
    q_const["q2.b2"] = np.array([4.2])
    loss, u = metagrad.meta_loss(pi_spec, q_spec, pi, q_const, s0)
    assert abs(loss - (-4.2)) < 1e-12
    assert all(np.all(g == 0.0) for g in u.values())


def test_meta_loss_empty_initial_states(rng):
    pi_spec, q_spec, pi, q, _, _, _, _ = _instance(rng)
    with pytest.raises(ValueError, match="empty"):
        metagrad.meta_loss(pi_spec, q_spec, pi, q, np.zeros((0, 3)))


def test_meta_loss_gradient_only_covers_policy(rng):
    pi_spec, q_spec, pi, q, _, _, s0, _ = _instance(rng)
    _, u = metagrad.meta_loss(pi_spec, q_spec, pi, q, s0)
    assert set(u) == set(pi)


@pytest.mark.parametrize("seed", range(5))
def test_meta_alpha_grad_matches_fd_oracle(seed):
    rng = np.random.default_rng(seed)
    pi_spec, q_spec, pi, q, states, noise, s0, v = _instance(rng)
    alpha = float(np.exp(rng.uniform(-4.0, 0.0)))
    args = (pi_spec, q_spec, pi, q, states, noise, s0, alpha, v, 3e-4, 0.99, 1e-12)
    g = metagrad.meta_alpha_grad(*args)
    o = metagrad.meta_alpha_fd_oracle(*args, h=1e-4)
    assert abs(g - o) / max(abs(o), 1e-8) <= 1e-4


def test_meta_alpha_grad_mutates_nothing(rng):
    pi_spec, q_spec, pi, q, states, noise, s0, v = _instance(rng)
    hashes = (_hash(pi), _hash(q), _hash(v))
    metagrad.meta_alpha_grad(pi_spec, q_spec, pi, q, states, noise, s0, 0.3, v,
                             3e-4, 0.99, 1e-12)
    assert (_hash(pi), _hash(q), _hash(v)) == hashes


def test_sgd_linearity_probe(rng):
    pi_spec, q_spec, pi, q, states, noise, s0, _ = _instance(rng)
    dec = metagrad.decompose_policy_grad(pi_spec, q_spec, pi, q, states, noise)
    lr = 1e-3
    hyp = metagrad.sgd_step_with_sensitivity(pi, dec, 0.5, lr)
    for k in pi:
        assert np.array_equal(hyp.dphi_dalpha[k], -lr * dec.g_entropy[k])
    _, u = metagrad.meta_loss(pi_spec, q_spec, hyp.phi_plus, q, s0)
    via_inner = sum(np.sum(u[k] * hyp.dphi_dalpha[k]) for k in u)
    closed = -lr * sum(np.sum(u[k] * dec.g_entropy[k]) for k in u)
    assert abs(via_inner - closed) < 1e-15


def test_fd_oracle_error_shrinks_with_h(rng):
    pi_spec, q_spec, pi, q, states, noise, s0, v = _instance(rng)
    args = (pi_spec, q_spec, pi, q, states, noise, s0, 0.4, v, 3e-4, 0.99, 1e-12)
    exact = metagrad.meta_alpha_grad(*args)
    errs = [abs(metagrad.meta_alpha_fd_oracle(*args, h=h) - exact) for h in (1e-2, 1e-4)]
    assert errs[1] <= errs[0]


def test_fd_oracle_rejects_bad_h(rng):
    pi_spec, q_spec, pi, q, states, noise, s0, v = _instance(rng)
    with pytest.raises(ValueError):
        metagrad.meta_alpha_fd_oracle(pi_spec, q_spec, pi, q, states, noise, s0,
                                      0.4, v, 3e-4, 0.99, 1e-12, h=0.0)
