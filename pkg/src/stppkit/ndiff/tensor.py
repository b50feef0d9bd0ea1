"""Dense float64 tensors with reverse-mode differentiation on an explicit tape.

Operations record themselves only while a :class:`Tape` is active and at least
one input requires a gradient::

    with Tape() as tape:
        loss = ((x @ w).softplus()).sum()
    tape.backward(loss)
    w.grad  # d loss / d w
"""

from __future__ import annotations

import threading
from typing import Callable, Sequence

import numpy as np


class ShapeError(ValueError):
    pass


_local = threading.local()


def _active_tape() -> "Tape | None":
    stack = getattr(_local, "stack", None)
    return stack[-1] if stack else None


class Tape:
    """Append-only record of operations; :meth:`backward` walks it once in reverse."""

    def __init__(self):
        self.nodes: list[tuple[Tensor, tuple[Tensor, ...], Callable]] = []
        self.consumed = False

    def __enter__(self) -> "Tape":
        if not hasattr(_local, "stack"):
            _local.stack = []
        _local.stack.append(self)
        return self

    def __exit__(self, *exc):
        _local.stack.pop()
        return False

    def record(self, out: "Tensor", inputs: tuple["Tensor", ...], backward: Callable) -> None:
        self.nodes.append((out, inputs, backward))

    def backward(self, loss: "Tensor") -> None:
        """Accumulate ``d loss / d leaf`` into ``leaf.grad`` for every leaf requiring a gradient."""
        if self.consumed:
            raise RuntimeError("tape already consumed by a previous backward(); re-run the forward pass")
        if loss.data.size != 1:
            raise ShapeError(f"backward() needs a scalar loss, got shape {loss.shape}")
        self.consumed = True
        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        produced = set()
        for out, inputs, fn in reversed(self.nodes):
            produced.add(id(out))
            g = grads.pop(id(out), None)
            if g is None:
                continue
            for inp, gi in zip(inputs, fn(g)):
                if gi is None or not inp.requires_grad:
                    continue
                gi = _unbroadcast(gi, inp.data.shape)
                key = id(inp)
                if key in grads:
                    grads[key] = grads[key] + gi
                else:
                    grads[key] = gi
        leaves = {}
        for _, inputs, _ in self.nodes:
            for inp in inputs:
                if inp.requires_grad and id(inp) not in produced:
                    leaves[id(inp)] = inp
        if id(loss) not in produced and loss.requires_grad:
            leaves[id(loss)] = loss
        for key, leaf in leaves.items():
            g = grads.get(key)
            if g is None:
                continue
            leaf.grad = g.copy() if leaf.grad is None else leaf.grad + g
        self.nodes.clear()


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


def _data(x) -> np.ndarray:
    return x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)


def _lift(x) -> "Tensor":
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, inputs: Sequence["Tensor"], backward: Callable) -> "Tensor":
    tape = _active_tape()
    needs = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=needs)
    if needs:
        tape.record(out, tuple(inputs), backward)
    return out


class Tensor:
    __array_priority__ = 100  # numpy defers binary operators to us

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def __pow__(self, k):
        return power(self, k)

    # methods mirroring the free functions
    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis, keepdims)

    def exp(self):
        return exp(self)

    def log(self):
        return log(self)

    def softplus(self):
        return softplus(self)

    def reshape(self, *shape):
        return reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], tuple) else shape)

    def transpose(self, *axes):
        return transpose(self, axes or None)


def _check_broadcast(op: str, a: np.ndarray, b: np.ndarray) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


def add(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    _check_broadcast("add", a.data, b.data)
    return _make(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    _check_broadcast("sub", a.data, b.data)
    return _make(a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    _check_broadcast("mul", a.data, b.data)
    ad, bd = a.data, b.data
    return _make(ad * bd, (a, b), lambda g: (g * bd, g * ad))


def div(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    _check_broadcast("div", a.data, b.data)
    ad, bd = a.data, b.data
    out = ad / bd
    return _make(out, (a, b), lambda g: (g / bd, -g * out / bd))


def power(a, k: float) -> Tensor:
    a = _lift(a)
    ad = a.data
    return _make(ad ** k, (a,), lambda g: (g * k * ad ** (k - 1),))


def matmul(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    ad, bd = a.data, b.data
    if ad.ndim < 2 or bd.ndim < 2 or ad.shape[-1] != bd.shape[-2]:
        raise ShapeError(f"matmul: incompatible shapes {ad.shape} and {bd.shape}")
    try:
        out = ad @ bd
    except ValueError:
        raise ShapeError(f"matmul: incompatible batch shapes {ad.shape} and {bd.shape}") from None
    return _make(out, (a, b), lambda g: (g @ np.swapaxes(bd, -1, -2), np.swapaxes(ad, -1, -2) @ g))


def exp(a) -> Tensor:
    a = _lift(a)
    out = np.exp(a.data)
    return _make(out, (a,), lambda g: (g * out,))


def log(a) -> Tensor:
    a = _lift(a)
    ad = a.data
    return _make(np.log(ad), (a,), lambda g: (g / ad,))


def softplus(a) -> Tensor:
    a = _lift(a)
    ad = a.data
    out = np.logaddexp(0.0, ad)
    return _make(out, (a,), lambda g: (g / (1.0 + np.exp(-ad)),))


def relu(a) -> Tensor:
    a = _lift(a)
    ad = a.data
    return _make(np.maximum(ad, 0.0), (a,), lambda g: (g * (ad > 0),))


_GELU_C = np.sqrt(2.0 / np.pi)


def gelu(a) -> Tensor:
    """Tanh approximation of GELU (smooth, so finite-difference checks are clean)."""
    a = _lift(a)
    x = a.data
    inner = _GELU_C * (x + 0.044715 * x**3)
    th = np.tanh(inner)
    out = 0.5 * x * (1.0 + th)

    def backward(g):
        d_inner = _GELU_C * (1.0 + 3 * 0.044715 * x**2)
        return (g * (0.5 * (1.0 + th) + 0.5 * x * (1.0 - th**2) * d_inner),)

    return _make(out, (a,), backward)


def tanh(a) -> Tensor:
    a = _lift(a)
    out = np.tanh(a.data)
    return _make(out, (a,), lambda g: (g * (1.0 - out**2),))


def clamp_min(a, floor: float) -> Tensor:
    a = _lift(a)
    ad = a.data
    return _make(np.maximum(ad, floor), (a,), lambda g: (g * (ad >= floor),))


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _lift(a)
    shape = a.data.shape
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape),)

    return _make(out, (a,), backward)


def tmean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _lift(a)
    n = a.data.size if axis is None else np.prod([a.data.shape[ax] for ax in np.atleast_1d(axis)])
    return tsum(a, axis, keepdims) * (1.0 / n)


def softmax(a, axis: int = -1) -> Tensor:
    a = _lift(a)
    z = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _make(out, (a,), backward)


def layer_norm(a, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis (no affine part; compose with mul/add for gain and bias)."""
    a = _lift(a)
    x = a.data
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc**2).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv

    def backward(g):
        gm = g.mean(axis=-1, keepdims=True)
        gx = (g * xhat).mean(axis=-1, keepdims=True)
        return (inv * (g - gm - xhat * gx),)

    return _make(xhat, (a,), backward)


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    ts = [_lift(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError:
        raise ShapeError(f"concat: incompatible shapes {[t.shape for t in ts]} on axis {axis}") from None
    sizes = np.cumsum([t.data.shape[axis] for t in ts])[:-1]

    def backward(g):
        return tuple(np.split(g, sizes, axis=axis))

    return _make(out, ts, backward)


def getitem(a, idx) -> Tensor:
    a = _lift(a)
    shape = a.data.shape

    parts = idx if isinstance(idx, tuple) else (idx,)
    fancy = any(isinstance(i, (list, np.ndarray)) for i in parts)

    def backward(g):
        full = np.zeros(shape)
        if fancy:
            np.add.at(full, idx, g)
        else:
            full[idx] = g
        return (full,)

    return _make(a.data[idx], (a,), backward)


slice_ = getitem


def reshape(a, shape) -> Tensor:
    a = _lift(a)
    old = a.data.shape
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot reshape {old} to {shape}") from None
    return _make(out, (a,), lambda g: (g.reshape(old),))


def transpose(a, axes=None) -> Tensor:
    a = _lift(a)
    out = np.transpose(a.data, axes)
    inv = None if axes is None else np.argsort(axes)
    return _make(out, (a,), lambda g: (np.transpose(g, inv),))


def expm1_ratio(a) -> Tensor:
    """``(1 - exp(-x)) / x`` with its limit 1 at ``x = 0``."""
    a = _lift(a)
    x = a.data
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    em = np.exp(-xs)
    out = np.where(small, 1.0 - x / 2 + x**2 / 6 - x**3 / 24, -np.expm1(-xs) / xs)
    deriv = np.where(small, -0.5 + x / 3 - x**2 / 8, (xs * em + np.expm1(-xs)) / xs**2)
    return _make(out, (a,), lambda g: (g * deriv,))
