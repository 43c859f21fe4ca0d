"""Minimal reverse-mode autodiff over float64 numpy arrays.

One fixed op set covers both fusion architectures and the distance/loss head,
so a single finite-difference test certifies every gradient path. Graphs are
built implicitly through parent links; `backward` walks an iterative
topological order (sequence graphs get deep).
"""

from __future__ import annotations

import numpy as np


class Var:
    """A node: value, accumulated gradient, and per-parent vector-Jacobian closures."""

    __slots__ = ("value", "grad", "parents", "vjps", "requires_grad")

    def __init__(self, value, parents=(), vjps=(), requires_grad=False):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.parents = parents
        self.vjps = vjps
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)

    @property
    def shape(self):
        return self.value.shape


def const(value) -> Var:
    return Var(value)


def param(value) -> Var:
    return Var(value, requires_grad=True)


def _unbroadcast(grad, shape):
    # Sum the gradient back down to the shape numpy broadcast it up from.
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a: Var, b: Var) -> Var:
    return Var(
        a.value + b.value,
        (a, b),
        (lambda g: _unbroadcast(g, a.value.shape), lambda g: _unbroadcast(g, b.value.shape)),
    )


def sub(a: Var, b: Var) -> Var:
    return Var(
        a.value - b.value,
        (a, b),
        (lambda g: _unbroadcast(g, a.value.shape), lambda g: _unbroadcast(-g, b.value.shape)),
    )


def mul(a: Var, b: Var) -> Var:
    return Var(
        a.value * b.value,
        (a, b),
        (lambda g: _unbroadcast(g * b.value, a.value.shape), lambda g: _unbroadcast(g * a.value, b.value.shape)),
    )


def div(a: Var, b: Var) -> Var:
    return Var(
        a.value / b.value,
        (a, b),
        (
            lambda g: _unbroadcast(g / b.value, a.value.shape),
            lambda g: _unbroadcast(-g * a.value / (b.value * b.value), b.value.shape),
        ),
    )


def matmul(a: Var, b: Var) -> Var:
    return Var(a.value @ b.value, (a, b), (lambda g: g @ b.value.T, lambda g: a.value.T @ g))


def transpose(a: Var) -> Var:
    return Var(a.value.T, (a,), (lambda g: g.T,))


def sigmoid(a: Var) -> Var:
    x = a.value
    out = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    return Var(out, (a,), (lambda g: g * out * (1.0 - out),))


def tanh(a: Var) -> Var:
    out = np.tanh(a.value)
    return Var(out, (a,), (lambda g: g * (1.0 - out * out),))


def relu(a: Var) -> Var:
    mask = a.value > 0
    return Var(a.value * mask, (a,), (lambda g: g * mask,))


def square(a: Var) -> Var:
    return Var(a.value * a.value, (a,), (lambda g: g * 2.0 * a.value,))


def sqrt(a: Var) -> Var:
    """Elementwise sqrt with subgradient 0 where the value is 0.

    The zero case matters at the loss minimum: sqrt(sum of exact zeros) must
    report zero gradients rather than NaN.
    """
    out = np.sqrt(a.value)
    factor = np.where(out > 0, 0.5 / np.where(out > 0, out, 1.0), 0.0)
    return Var(out, (a,), (lambda g: g * factor,))


def inv_safe(a: Var) -> Var:
    """1/x where x > 0, else 0 (and zero gradient there); for zero-norm rows."""
    positive = a.value > 0
    out = np.where(positive, 1.0 / np.where(positive, a.value, 1.0), 0.0)
    return Var(out, (a,), (lambda g: g * np.where(positive, -out * out, 0.0),))


def vsum(a: Var, axis=None, keepdims=False) -> Var:
    out = a.value.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return np.broadcast_to(g, a.value.shape).copy()

    return Var(out, (a,), (vjp,))


def mean(a: Var, axis=None, keepdims=False) -> Var:
    n = a.value.size if axis is None else a.value.shape[axis]
    summed = vsum(a, axis=axis, keepdims=keepdims)
    return mul(summed, const(1.0 / n))


def concat(parts: list[Var], axis: int = 0) -> Var:
    sizes = [p.value.shape[axis] for p in parts]
    edges = np.concatenate([[0], np.cumsum(sizes)])

    def make_vjp(i):
        lo, hi = int(edges[i]), int(edges[i + 1])

        def vjp(g):
            index = [slice(None)] * g.ndim
            index[axis] = slice(lo, hi)
            return g[tuple(index)]

        return vjp

    return Var(np.concatenate([p.value for p in parts], axis=axis), tuple(parts), tuple(make_vjp(i) for i in range(len(parts))))


def narrow(a: Var, axis: int, start: int, length: int) -> Var:
    index = [slice(None)] * a.value.ndim
    index[axis] = slice(start, start + length)
    index = tuple(index)

    def vjp(g):
        full = np.zeros_like(a.value)
        full[index] = g
        return full

    return Var(a.value[index], (a,), (vjp,))


def dropout(a: Var, rate: float, rng: np.random.Generator) -> Var:
    """Inverted dropout; identity when rate is 0. Callers skip it in eval mode."""
    if rate == 0.0:
        return a
    mask = (rng.random(a.value.shape) >= rate) / (1.0 - rate)
    return mul(a, const(mask))


def clip01(a: Var) -> Var:
    """Clamp to [0, 1]; gradient passes only through the unclipped interior."""
    inside = (a.value > 0.0) & (a.value < 1.0)
    return Var(np.clip(a.value, 0.0, 1.0), (a,), (lambda g: g * inside,))


def _topo_order(root: Var) -> list[Var]:
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(root: Var) -> None:
    """Accumulate gradients of a scalar root into every requires_grad ancestor."""
    if root.value.ndim != 0 and root.value.size != 1:
        raise ValueError(f"backward needs a scalar root, got shape {root.value.shape}")
    order = _topo_order(root)
    for node in order:
        node.grad = None
    root.grad = np.ones_like(root.value)
    for node in reversed(order):
        if node.grad is None or not node.requires_grad:
            continue
        for parent, vjp in zip(node.parents, node.vjps):
            if not parent.requires_grad:
                continue
            contribution = vjp(node.grad)
            parent.grad = contribution if parent.grad is None else parent.grad + contribution
