"""Minimal reverse-mode automatic differentiation over numpy arrays.

A Tensor wraps an ndarray and records its parents plus a backward closure;
``backward`` runs the closures in reverse topological order.  Only the ops
the model and the dependency function need are implemented, each with an
exact gradient, so every layer can be checked against finite differences.
All computation is float64.
"""
from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum grad down to the given (broadcast-source) shape."""
    if grad.shape == shape:
        return grad
    # sum over leading dims added by broadcasting
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "parents", "bwd", "requires_grad")

    def __init__(self, data, parents=(), bwd=None, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.parents = tuple(parents)
        self.bwd = bwd
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    # ---- graph traversal ----

    def backward(self, upstream=None):
        if upstream is None:
            upstream = np.ones_like(self.data)
        topo: list[Tensor] = []
        seen = set()

        def visit(t: Tensor):
            stack = [(t, False)]
            while stack:
                node, expanded = stack.pop()
                if expanded:
                    topo.append(node)
                    continue
                if id(node) in seen or not node.requires_grad:
                    continue
                seen.add(id(node))
                stack.append((node, True))
                for p in node.parents:
                    stack.append((p, False))

        visit(self)
        self.grad = np.asarray(upstream, dtype=np.float64).reshape(self.data.shape)
        for t in reversed(topo):
            if t.bwd is not None and t.grad is not None:
                t.bwd(t.grad)

    def accumulate(self, grad: np.ndarray):
        if self.grad is None:
            self.grad = grad.copy()
        else:
            self.grad += grad

    # ---- elementwise arithmetic ----

    def __add__(self, other):
        other = as_tensor(other)
        out = Tensor(self.data + other.data, (self, other))

        def bwd(g):
            if self.requires_grad:
                self.accumulate(_unbroadcast(g, self.shape))
            if other.requires_grad:
                other.accumulate(_unbroadcast(g, other.shape))
        out.bwd = bwd
        return out

    __radd__ = __add__

    def __sub__(self, other):
        other = as_tensor(other)
        out = Tensor(self.data - other.data, (self, other))

        def bwd(g):
            if self.requires_grad:
                self.accumulate(_unbroadcast(g, self.shape))
            if other.requires_grad:
                other.accumulate(_unbroadcast(-g, other.shape))
        out.bwd = bwd
        return out

    def __rsub__(self, other):
        return as_tensor(other) - self

    def __mul__(self, other):
        other = as_tensor(other)
        out = Tensor(self.data * other.data, (self, other))

        def bwd(g):
            if self.requires_grad:
                self.accumulate(_unbroadcast(g * other.data, self.shape))
            if other.requires_grad:
                other.accumulate(_unbroadcast(g * self.data, other.shape))
        out.bwd = bwd
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other)
        out = Tensor(self.data / other.data, (self, other))

        def bwd(g):
            if self.requires_grad:
                self.accumulate(_unbroadcast(g / other.data, self.shape))
            if other.requires_grad:
                other.accumulate(_unbroadcast(-g * self.data / (other.data ** 2), other.shape))
        out.bwd = bwd
        return out

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __neg__(self):
        return self * -1.0

    def __pow__(self, exponent: float):
        out = Tensor(self.data ** exponent, (self,))

        def bwd(g):
            if self.requires_grad:
                self.accumulate(g * exponent * self.data ** (exponent - 1))
        out.bwd = bwd
        return out

    # ---- matrix ops ----

    def __matmul__(self, other):
        other = as_tensor(other)
        out = Tensor(self.data @ other.data, (self, other))

        def bwd(g):
            if self.requires_grad:
                self.accumulate(_unbroadcast(g @ np.swapaxes(other.data, -1, -2), self.shape))
            if other.requires_grad:
                other.accumulate(_unbroadcast(np.swapaxes(self.data, -1, -2) @ g, other.shape))
        out.bwd = bwd
        return out

    def transpose(self, *axes):
        axes = axes or tuple(reversed(range(self.ndim)))
        inv = np.argsort(axes)
        out = Tensor(self.data.transpose(axes), (self,))

        def bwd(g):
            if self.requires_grad:
                self.accumulate(g.transpose(inv))
        out.bwd = bwd
        return out

    @property
    def T(self):
        return self.transpose()

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        src = self.shape
        out = Tensor(self.data.reshape(shape), (self,))

        def bwd(g):
            if self.requires_grad:
                self.accumulate(g.reshape(src))
        out.bwd = bwd
        return out

    def __getitem__(self, key):
        out = Tensor(self.data[key], (self,))

        def bwd(g):
            if self.requires_grad:
                full = np.zeros_like(self.data)
                np.add.at(full, key, g)
                self.accumulate(full)
        out.bwd = bwd
        return out

    # ---- reductions and scans ----

    def sum(self, axis=None, keepdims=False):
        out = Tensor(self.data.sum(axis=axis, keepdims=keepdims), (self,))

        def bwd(g):
            if not self.requires_grad:
                return
            if axis is None:
                self.accumulate(np.broadcast_to(g, self.shape).copy())
            else:
                gg = g if keepdims else np.expand_dims(g, axis)
                self.accumulate(np.broadcast_to(gg, self.shape).copy())
        out.bwd = bwd
        return out

    def mean(self, axis=None, keepdims=False):
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def cumsum(self, axis=-1):
        out = Tensor(np.cumsum(self.data, axis=axis), (self,))

        def bwd(g):
            if self.requires_grad:
                rev = np.flip(np.cumsum(np.flip(g, axis=axis), axis=axis), axis=axis)
                self.accumulate(rev)
        out.bwd = bwd
        return out

    def flip(self, axis=-1):
        out = Tensor(np.flip(self.data, axis=axis).copy(), (self,))

        def bwd(g):
            if self.requires_grad:
                self.accumulate(np.flip(g, axis=axis))
        out.bwd = bwd
        return out

    def cummax(self):
        """Running maximum of a 1-D tensor; gradient routes to the position
        where each running maximum was first attained."""
        x = self.data
        vals = np.maximum.accumulate(x)
        # index of the running argmax (first occurrence)
        idx = np.zeros(len(x), dtype=np.int64)
        best = 0
        for i in range(1, len(x)):
            if x[i] > x[best]:
                best = i
            idx[i] = best
        out = Tensor(vals, (self,))

        def bwd(g):
            if self.requires_grad:
                full = np.zeros_like(x)
                np.add.at(full, idx, g)
                self.accumulate(full)
        out.bwd = bwd
        return out


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(data) -> Tensor:
    return Tensor(np.asarray(data, dtype=np.float64), requires_grad=True)


def concat(tensors, axis=0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors))
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bwd(g):
        for t, lo, hi in zip(tensors, offsets, offsets[1:]):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(lo, hi)
                t.accumulate(g[tuple(sl)])
    out.bwd = bwd
    return out


def stack(tensors, axis=0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = Tensor(np.stack([t.data for t in tensors], axis=axis), tuple(tensors))

    def bwd(g):
        for i, t in enumerate(tensors):
            if t.requires_grad:
                t.accumulate(np.take(g, i, axis=axis))
    out.bwd = bwd
    return out


def exp(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out = Tensor(np.exp(x.data), (x,))

    def bwd(g):
        if x.requires_grad:
            x.accumulate(g * out.data)
    out.bwd = bwd
    return out


def log(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out = Tensor(np.log(x.data), (x,))

    def bwd(g):
        if x.requires_grad:
            x.accumulate(g / x.data)
    out.bwd = bwd
    return out


def sqrt(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out = Tensor(np.sqrt(x.data), (x,))

    def bwd(g):
        if x.requires_grad:
            x.accumulate(g * 0.5 / out.data)
    out.bwd = bwd
    return out


def tanh(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out = Tensor(np.tanh(x.data), (x,))

    def bwd(g):
        if x.requires_grad:
            x.accumulate(g * (1.0 - out.data ** 2))
    out.bwd = bwd
    return out


def sigmoid(x: Tensor) -> Tensor:
    x = as_tensor(x)
    # numerically stable in both tails
    d = x.data
    val = np.where(d >= 0, 1.0 / (1.0 + np.exp(-np.abs(d))),
                   np.exp(-np.abs(d)) / (1.0 + np.exp(-np.abs(d))))
    out = Tensor(val, (x,))

    def bwd(g):
        if x.requires_grad:
            x.accumulate(g * out.data * (1.0 - out.data))
    out.bwd = bwd
    return out


def relu(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out = Tensor(np.maximum(x.data, 0.0), (x,))

    def bwd(g):
        if x.requires_grad:
            x.accumulate(g * (x.data > 0))
    out.bwd = bwd
    return out


def softmax(x: Tensor, axis=-1) -> Tensor:
    x = as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    val = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(val, (x,))

    def bwd(g):
        if x.requires_grad:
            dot = (g * val).sum(axis=axis, keepdims=True)
            x.accumulate(val * (g - dot))
    out.bwd = bwd
    return out


def log_softmax(x: Tensor, axis=-1) -> Tensor:
    x = as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    val = shifted - lse
    out = Tensor(val, (x,))

    def bwd(g):
        if x.requires_grad:
            sm = np.exp(val)
            x.accumulate(g - sm * g.sum(axis=axis, keepdims=True))
    out.bwd = bwd
    return out


def take_rows(table: Tensor, ids) -> Tensor:
    """Embedding lookup: rows of a 2-D table by integer index."""
    table = as_tensor(table)
    ids = np.asarray(ids, dtype=np.int64)
    out = Tensor(table.data[ids], (table,))

    def bwd(g):
        if table.requires_grad:
            full = np.zeros_like(table.data)
            np.add.at(full, ids, g)
            table.accumulate(full)
    out.bwd = bwd
    return out


def zeros(shape) -> Tensor:
    return Tensor(np.zeros(shape))


def ones(shape) -> Tensor:
    return Tensor(np.ones(shape))
