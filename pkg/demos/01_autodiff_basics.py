"""Tour of the reverse-mode autodiff core.

Builds a small expression graph by hand, runs backward(), and checks the
result against central finite differences.
"""

import numpy as np

from metasac import autodiff as ad


def main():
    rng = np.random.default_rng(0)
    W = rng.standard_normal((3, 2))
    b = np.zeros(2)
    x = rng.standard_normal((4, 3))

    leaves = ad.lift({"W": W, "b": b})
    h = ad.tanh(ad.affine(ad.DiffValue(x), leaves["W"], leaves["b"]))
    loss = ad.vmean(ad.square(h))
    grads = ad.backward(loss, leaves)
    print("loss:", float(loss.data))

    def f(Wf):
        return np.mean(np.tanh(x @ Wf + b) ** 2)

    h_fd = 1e-6
    fd = np.zeros_like(W)
    for i in range(W.shape[0]):
        for j in range(W.shape[1]):
            Wp, Wm = W.copy(), W.copy()
            Wp[i, j] += h_fd
            Wm[i, j] -= h_fd
            fd[i, j] = (f(Wp) - f(Wm)) / (2 * h_fd)

    err = np.max(np.abs(grads["W"] - fd))
    print("max |autodiff - finite difference| for dL/dW:", err)
    assert err < 1e-8


if __name__ == "__main__":
    main()
