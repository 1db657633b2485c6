"""Minimal dense reverse-mode differentiation on float64 numpy arrays.

Builds a dynamic graph of `DiffValue` nodes; `backward` walks it once in
reverse topological order. Only first-order gradients are supported.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np


class DiffValue:
    """A node in the computation graph: float64 data plus parent closures."""

    __slots__ = ("data", "grad", "_parents")

    # make ndarray <op> DiffValue defer to our reflected operators
    __array_ufunc__ = None

    def __init__(self, data, parents=()):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self._parents = parents

    @property
    def shape(self):
        return self.data.shape

    # operator sugar; scalars and ndarrays are promoted to constants
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)


def _as_dv(x) -> DiffValue:
    return x if isinstance(x, DiffValue) else DiffValue(x)


def _check_broadcast(op: str, a: np.ndarray, b: np.ndarray):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ValueError(f"{op}: incompatible shapes {a.shape} and {b.shape}")


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum gradient over axes that were broadcast in the forward op."""
    g = np.asarray(g, dtype=np.float64)
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def add(a, b) -> DiffValue:
    a, b = _as_dv(a), _as_dv(b)
    _check_broadcast("add", a.data, b.data)
    return DiffValue(
        a.data + b.data,
        ((a, lambda g: _unbroadcast(g, a.shape)), (b, lambda g: _unbroadcast(g, b.shape))),
    )


def sub(a, b) -> DiffValue:
    a, b = _as_dv(a), _as_dv(b)
    _check_broadcast("sub", a.data, b.data)
    return DiffValue(
        a.data - b.data,
        ((a, lambda g: _unbroadcast(g, a.shape)), (b, lambda g: _unbroadcast(-g, b.shape))),
    )


def mul(a, b) -> DiffValue:
    a, b = _as_dv(a), _as_dv(b)
    _check_broadcast("mul", a.data, b.data)
    return DiffValue(
        a.data * b.data,
        (
            (a, lambda g: _unbroadcast(g * b.data, a.shape)),
            (b, lambda g: _unbroadcast(g * a.data, b.shape)),
        ),
    )


def div(a, b) -> DiffValue:
    a, b = _as_dv(a), _as_dv(b)
    _check_broadcast("div", a.data, b.data)
    inv = 1.0 / b.data
    return DiffValue(
        a.data * inv,
        (
            (a, lambda g: _unbroadcast(g * inv, a.shape)),
            (b, lambda g: _unbroadcast(-g * a.data * inv * inv, b.shape)),
        ),
    )


def neg(a) -> DiffValue:
    a = _as_dv(a)
    return DiffValue(-a.data, ((a, lambda g: -g),))


def tanh(a) -> DiffValue:
    a = _as_dv(a)
    t = np.tanh(a.data)
    return DiffValue(t, ((a, lambda g: g * (1.0 - t * t)),))


def exp(a) -> DiffValue:
    a = _as_dv(a)
    e = np.exp(a.data)
    return DiffValue(e, ((a, lambda g: g * e),))


def log(a) -> DiffValue:
    a = _as_dv(a)
    if np.any(a.data <= 0.0):
        raise ValueError("log: non-positive input")
    return DiffValue(np.log(a.data), ((a, lambda g: g / a.data),))


def sqrt(a) -> DiffValue:
    a = _as_dv(a)
    if np.any(a.data <= 0.0):
        raise ValueError("sqrt: non-positive input")
    r = np.sqrt(a.data)
    return DiffValue(r, ((a, lambda g: g * 0.5 / r),))


def square(a) -> DiffValue:
    a = _as_dv(a)
    return DiffValue(a.data * a.data, ((a, lambda g: g * 2.0 * a.data),))


def relu(a) -> DiffValue:
    a = _as_dv(a)
    mask = a.data > 0.0
    return DiffValue(np.where(mask, a.data, 0.0), ((a, lambda g: g * mask),))


def softplus(a) -> DiffValue:
    """log(1 + exp(x)), computed without overflow for large |x|."""
    a = _as_dv(a)
    out = np.logaddexp(0.0, a.data)
    sig = 1.0 / (1.0 + np.exp(-a.data))
    return DiffValue(out, ((a, lambda g: g * sig),))


def minimum(a, b) -> DiffValue:
    """Elementwise min; ties route the gradient to the first argument."""
    a, b = _as_dv(a), _as_dv(b)
    _check_broadcast("minimum", a.data, b.data)
    take_a = a.data <= b.data
    return DiffValue(
        np.where(take_a, a.data, b.data),
        (
            (a, lambda g: _unbroadcast(g * take_a, a.shape)),
            (b, lambda g: _unbroadcast(g * ~take_a, b.shape)),
        ),
    )


def clip(a, lo: float, hi: float) -> DiffValue:
    """Clamp values; gradient is zero outside [lo, hi]."""
    a = _as_dv(a)
    inside = (a.data >= lo) & (a.data <= hi)
    return DiffValue(np.clip(a.data, lo, hi), ((a, lambda g: g * inside),))


def affine(x, W, b) -> DiffValue:
    """Batched affine map: x @ W + b with x of shape (batch, in)."""
    x, W, b = _as_dv(x), _as_dv(W), _as_dv(b)
    if x.data.ndim != 2 or W.data.ndim != 2 or x.data.shape[1] != W.data.shape[0]:
        raise ValueError(f"affine: incompatible shapes {x.shape} and {W.shape}")
    if b.data.shape != (W.data.shape[1],):
        raise ValueError(f"affine: bias shape {b.shape} does not match output dim {W.shape}")
    return DiffValue(
        x.data @ W.data + b.data,
        (
            (x, lambda g: g @ W.data.T),
            (W, lambda g: x.data.T @ g),
            (b, lambda g: g.sum(axis=0)),
        ),
    )


def concat(values, axis: int = -1) -> DiffValue:
    values = [_as_dv(v) for v in values]
    data = np.concatenate([v.data for v in values], axis=axis)
    splits = np.cumsum([v.data.shape[axis] for v in values])[:-1]

    def make_fn(i):
        return lambda g: np.split(g, splits, axis=axis)[i]

    return DiffValue(data, tuple((v, make_fn(i)) for i, v in enumerate(values)))


def vsum(a, axis=None) -> DiffValue:
    a = _as_dv(a)
    if axis is None:
        return DiffValue(a.data.sum(), ((a, lambda g: np.broadcast_to(g, a.shape).copy()),))
    return DiffValue(
        a.data.sum(axis=axis),
        ((a, lambda g: np.broadcast_to(np.expand_dims(g, axis), a.shape).copy()),),
    )


def vmean(a, axis=None) -> DiffValue:
    a = _as_dv(a)
    if axis is None:
        n = a.data.size
        return DiffValue(a.data.mean(), ((a, lambda g: np.broadcast_to(g / n, a.shape).copy()),))
    n = a.data.shape[axis]
    return DiffValue(
        a.data.mean(axis=axis),
        ((a, lambda g: np.broadcast_to(np.expand_dims(g / n, axis), a.shape).copy()),),
    )


def detach(v: DiffValue) -> DiffValue:
    """Same data, no parents: backward treats the value as a constant."""
    return DiffValue(v.data)


def _topo_order(root: DiffValue) -> list[DiffValue]:
    order, visited = [], set()
    stack = [(root, iter(root._parents))]
    visited.add(id(root))
    while stack:
        node, it = stack[-1]
        advanced = False
        for parent, _ in it:
            if id(parent) not in visited:
                visited.add(id(parent))
                stack.append((parent, iter(parent._parents)))
                advanced = True
                break
        if not advanced:
            order.append(node)
            stack.pop()
    return order  # parents before children


def backward(root: DiffValue, seeds: Mapping[str, DiffValue]) -> dict[str, np.ndarray]:
    """Gradient of a scalar root w.r.t. every leaf in `seeds`.

    Leaves not reachable from the root get a zero gradient. Adjoints are
    reset on every call, so repeated backward passes agree exactly.
    """
    if root.data.size != 1:
        raise ValueError(f"backward: root must be scalar, got shape {root.shape}")
    order = _topo_order(root)
    for node in order:
        node.grad = np.zeros_like(node.data)
    root.grad = np.ones_like(root.data)
    for node in reversed(order):
        if node._parents and np.any(node.grad):
            for parent, fn in node._parents:
                parent.grad = parent.grad + fn(node.grad)
    out = {}
    for name, leaf in seeds.items():
        out[name] = leaf.grad.copy() if leaf.grad is not None else np.zeros_like(leaf.data)
    return out


def lift(params: Mapping[str, np.ndarray]) -> dict[str, DiffValue]:
    """Wrap a named parameter dict as graph leaves, sorted by identifier."""
    return {k: DiffValue(params[k]) for k in sorted(params)}
