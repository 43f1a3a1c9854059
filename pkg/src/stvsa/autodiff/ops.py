"""Differentiable primitives.

Every function takes tensors (or array-likes, promoted to constants) and returns
a :class:`Tensor`. Elementwise binary ops broadcast like numpy; their backward
rules sum gradients back down to each operand's shape.
"""

from __future__ import annotations

import math

import numpy as np

from .tensor import DimensionError, Tensor, make_result

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def _t(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> tuple:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} are not broadcastable") from None


# -- elementwise arithmetic ------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _t(a), _t(b)
    _broadcast_shape("add", a, b)
    sa, sb = a.shape, b.shape

    def bw(g):
        return unbroadcast(g, sa), unbroadcast(g, sb)

    return make_result(a.data + b.data, (a, b), bw)


def sub(a, b) -> Tensor:
    a, b = _t(a), _t(b)
    _broadcast_shape("sub", a, b)
    sa, sb = a.shape, b.shape

    def bw(g):
        return unbroadcast(g, sa), unbroadcast(-g, sb)

    return make_result(a.data - b.data, (a, b), bw)


def mul(a, b) -> Tensor:
    a, b = _t(a), _t(b)
    _broadcast_shape("mul", a, b)
    ad, bd = a.data, b.data

    def bw(g):
        return (unbroadcast(g * bd, ad.shape) if a.requires_grad else None,
                unbroadcast(g * ad, bd.shape) if b.requires_grad else None)

    return make_result(ad * bd, (a, b), bw)


def div(a, b) -> Tensor:
    a, b = _t(a), _t(b)
    _broadcast_shape("div", a, b)
    ad, bd = a.data, b.data
    out = ad / bd

    def bw(g):
        return (unbroadcast(g / bd, ad.shape) if a.requires_grad else None,
                unbroadcast(-g * out / bd, bd.shape) if b.requires_grad else None)

    return make_result(out, (a, b), bw)


def power(a, exponent: float) -> Tensor:
    a = _t(a)
    ad = a.data

    def bw(g):
        return (g * exponent * ad ** (exponent - 1.0),)

    return make_result(ad ** exponent, (a,), bw)


def broadcast_to(a, shape) -> Tensor:
    a = _t(a)
    shape = tuple(shape)
    try:
        out = np.broadcast_to(a.data, shape)
    except ValueError:
        raise DimensionError(f"broadcast_to: cannot broadcast {a.shape} to {shape}") from None
    sa = a.shape
    return make_result(np.array(out), (a,), lambda g: (unbroadcast(g, sa),))


# -- linear algebra / shape -------------------------------------------------

def matmul(a, b) -> Tensor:
    """Batched matrix product over the last two axes (both operands >= 2-D)."""
    a, b = _t(a), _t(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul: cannot multiply shapes {a.shape} and {b.shape}")
    try:
        out = np.matmul(a.data, b.data)
    except ValueError:
        raise DimensionError(f"matmul: batch dims of {a.shape} and {b.shape} do not broadcast") from None
    ad, bd = a.data, b.data

    def bw(g):
        ga = unbroadcast(np.matmul(g, np.swapaxes(bd, -1, -2)), ad.shape) if a.requires_grad else None
        gb = unbroadcast(np.matmul(np.swapaxes(ad, -1, -2), g), bd.shape) if b.requires_grad else None
        return ga, gb

    return make_result(out, (a, b), bw)


def transpose(a, axes=None) -> Tensor:
    a = _t(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    axes = tuple(axes)
    if sorted(ax % a.ndim for ax in axes) != list(range(a.ndim)):
        raise DimensionError(f"transpose: axes {axes} invalid for shape {a.shape}")
    inverse = tuple(np.argsort([ax % a.ndim for ax in axes]))
    return make_result(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),))


def swapaxes(a, ax1: int, ax2: int) -> Tensor:
    a = _t(a)
    return make_result(np.swapaxes(a.data, ax1, ax2), (a,), lambda g: (np.swapaxes(g, ax1, ax2),))


def reshape(a, shape) -> Tensor:
    a = _t(a)
    sa = a.shape
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise DimensionError(f"reshape: cannot reshape {sa} into {tuple(shape)}") from None
    return make_result(out, (a,), lambda g: (g.reshape(sa),))


def _is_basic_index(index) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return all(isinstance(i, (int, np.integer, slice)) or i is None or i is Ellipsis for i in items)


def index(a, idx) -> Tensor:
    """``a[idx]``; covers slicing and integer/fancy indexing."""
    a = _t(a)
    sa = a.shape
    basic = _is_basic_index(idx)

    def bw(g):
        out = np.zeros(sa)
        if basic:
            out[idx] += g
        else:
            np.add.at(out, idx, g)
        return (out,)

    return make_result(a.data[idx], (a,), bw)


def concat(tensors, axis: int = 0) -> Tensor:
    ts = [_t(x) for x in tensors]
    if not ts:
        raise DimensionError("concat: no inputs")
    try:
        out = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError:
        raise DimensionError(f"concat: shapes {[t.shape for t in ts]} differ off axis {axis}") from None
    splits = np.cumsum([t.shape[axis] for t in ts])[:-1]

    def bw(g):
        return tuple(np.split(g, splits, axis=axis))

    return make_result(out, tuple(ts), bw)


def stack(tensors, axis: int = 0) -> Tensor:
    ts = [_t(x) for x in tensors]
    expanded = [reshape(t, t.shape[:axis % (t.ndim + 1)] + (1,) + t.shape[axis % (t.ndim + 1):]) for t in ts]
    return concat(expanded, axis=axis)


# -- reductions --------------------------------------------------------------

def sum(a, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001 - mirrors numpy
    a = _t(a)
    sa = a.shape
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def bw(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, sa).copy(),)

    return make_result(out, (a,), bw)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _t(a)
    n = a.data.size if axis is None else int(np.prod([a.shape[ax] for ax in np.atleast_1d(axis)]))
    return mul(sum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def max(a, axis: int = -1, keepdims: bool = False) -> Tensor:  # noqa: A001
    """Maximum along one axis; the gradient goes to the first maximiser."""
    a = _t(a)
    arg = np.argmax(a.data, axis=axis)
    out = np.take_along_axis(a.data, np.expand_dims(arg, axis), axis=axis)
    sa = a.shape

    def bw(g):
        full = np.zeros(sa)
        gg = g if keepdims else np.expand_dims(g, axis)
        np.put_along_axis(full, np.expand_dims(arg, axis), gg, axis=axis)
        return (full,)

    return make_result(out if keepdims else np.squeeze(out, axis=axis), (a,), bw)


def maximum(a, floor: float) -> Tensor:
    """Elementwise ``max(a, floor)`` against a constant."""
    a = _t(a)
    mask = a.data > floor
    return make_result(np.where(mask, a.data, floor), (a,), lambda g: (g * mask,))


# -- elementwise nonlinearities -----------------------------------------------

def exp(a) -> Tensor:
    a = _t(a)
    out = np.exp(a.data)
    return make_result(out, (a,), lambda g: (g * out,))


def log(a) -> Tensor:
    a = _t(a)
    ad = a.data
    return make_result(np.log(ad), (a,), lambda g: (g / ad,))


def sqrt(a) -> Tensor:
    a = _t(a)
    out = np.sqrt(a.data)
    return make_result(out, (a,), lambda g: (g * 0.5 / out,))


def tanh(a) -> Tensor:
    a = _t(a)
    out = np.tanh(a.data)
    return make_result(out, (a,), lambda g: (g * (1.0 - out * out),))


def sigmoid(a) -> Tensor:
    a = _t(a)
    out = 0.5 * (1.0 + np.tanh(0.5 * a.data))
    return make_result(out, (a,), lambda g: (g * out * (1.0 - out),))


def relu(a) -> Tensor:
    a = _t(a)
    mask = a.data > 0
    return make_result(a.data * mask, (a,), lambda g: (g * mask,))


def gelu(a) -> Tensor:
    """GELU, tanh approximation (within 1e-3 of the erf form everywhere)."""
    a = _t(a)
    x = a.data
    inner = _SQRT_2_OVER_PI * (x + 0.044715 * x ** 3)
    th = np.tanh(inner)
    out = 0.5 * x * (1.0 + th)

    def bw(g):
        dinner = _SQRT_2_OVER_PI * (1.0 + 3 * 0.044715 * x * x)
        return (g * (0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * dinner),)

    return make_result(out, (a,), bw)


# -- normalisation / probabilities -------------------------------------------

def softmax(a, axis: int = -1) -> Tensor:
    a = _t(a)
    if a.ndim == 0 or a.shape[axis] == 0:
        raise DimensionError(f"softmax: empty axis {axis} for shape {a.shape}")
    z = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=axis, keepdims=True)

    def bw(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return make_result(out, (a,), bw)


def log_softmax(a, axis: int = -1) -> Tensor:
    a = _t(a)
    if a.ndim == 0 or a.shape[axis] == 0:
        raise DimensionError(f"log_softmax: empty axis {axis} for shape {a.shape}")
    z = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=axis, keepdims=True))
    out = z - lse
    probs = np.exp(out)

    def bw(g):
        return (g - probs * g.sum(axis=axis, keepdims=True),)

    return make_result(out, (a,), bw)


def layer_norm(x, gamma, beta, eps: float = 1e-5) -> Tensor:
    """Normalise over the last axis, then apply the affine pair."""
    x, gamma, beta = _t(x), _t(gamma), _t(beta)
    if x.ndim == 0 or x.shape[-1] < 1:
        raise DimensionError(f"layer_norm: last axis empty for shape {x.shape}")
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    gd = gamma.data
    out = xhat * gd + beta.data

    def bw(g):
        gx = gg = gb = None
        if x.requires_grad:
            dxhat = g * gd
            gx = inv * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
        if gamma.requires_grad:
            gg = unbroadcast(g * xhat, gd.shape)
        if beta.requires_grad:
            gb = unbroadcast(g, beta.shape)
        return gx, gg, gb

    return make_result(out, (x, gamma, beta), bw)


def cross_entropy(logits, labels) -> Tensor:
    """Mean negative log-likelihood of integer ``labels`` under softmax(logits).

    ``logits`` is ``[c]`` (single sample, ``labels`` an int) or ``[B, c]``.
    """
    logits = _t(logits)
    single = logits.ndim == 1
    lg = logits.data[None, :] if single else logits.data
    lab = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    n, c = lg.shape
    if lab.shape != (n,):
        raise DimensionError(f"cross_entropy: {lab.shape[0]} labels for {n} rows")
    if lab.min(initial=0) < 0 or lab.max(initial=0) >= c:
        raise ValueError(f"cross_entropy: label out of range for {c} classes: {lab.tolist()}")
    z = lg - lg.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -logp[np.arange(n), lab].mean()

    def bw(g):
        grad = np.exp(logp)
        grad[np.arange(n), lab] -= 1.0
        grad *= g / n
        return (grad[0] if single else grad,)

    return make_result(np.asarray(loss), (logits,), bw)


def soft_cross_entropy(logits, targets) -> Tensor:
    """Mean ``-sum(p * log softmax(logits))`` for probability targets ``[B, c]``."""
    logits = _t(logits)
    p = np.asarray(targets, dtype=np.float64)
    if p.shape != logits.shape:
        raise DimensionError(f"soft_cross_entropy: targets {p.shape} vs logits {logits.shape}")
    n = logits.shape[0]
    z = logits.data - logits.data.max(axis=-1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
    loss = -(p * logp).sum() / n

    def bw(g):
        return ((np.exp(logp) * p.sum(axis=-1, keepdims=True) - p) * (g / n),)

    return make_result(np.asarray(loss), (logits,), bw)


def mse(pred, target) -> Tensor:
    d = sub(pred, target)
    return mean(mul(d, d))
