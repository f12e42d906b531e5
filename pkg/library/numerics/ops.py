"""
Differentiable primitives.

Every public op takes Tensors (or array-likes, treated as constants), computes
its result with numpy, raises NumericError on NaN/Inf, and records a backward
rule on the active graph. Elementwise ops follow numpy broadcasting; gradients
are summed back to each input's shape.
"""

from __future__ import annotations

import builtins
from typing import Any, Sequence

import numpy as np

from library.errors import DimensionError
from library.numerics.graph import apply_op
from library.numerics.tensor import ArrayLike, Tensor


def as_tensor(value: ArrayLike, like: Tensor | None = None) -> Tensor:
    """Wrap constants as non-differentiable tensors (dtype follows ``like`` when given)."""
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else None
    return Tensor(np.asarray(value), dtype=dtype)


def _pair(a: ArrayLike, b: ArrayLike) -> tuple[Tensor, Tensor]:
    if isinstance(a, Tensor):
        return a, as_tensor(b, like=a)
    if isinstance(b, Tensor):
        return as_tensor(a, like=b), b
    return as_tensor(a), as_tensor(b)


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise DimensionError(f"{op}: cannot broadcast shapes {a.shape} and {b.shape}") from exc


# ----------------------------------------------------------------------
# Elementwise binary
# ----------------------------------------------------------------------
def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    ta, tb = _pair(a, b)
    _broadcast_shape(ta, tb, "add")
    out = ta.data + tb.data
    return apply_op(
        "add",
        out,
        (ta, tb),
        lambda g: (unbroadcast(g, ta.shape), unbroadcast(g, tb.shape)),
    )


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    ta, tb = _pair(a, b)
    _broadcast_shape(ta, tb, "sub")
    out = ta.data - tb.data
    return apply_op(
        "sub",
        out,
        (ta, tb),
        lambda g: (unbroadcast(g, ta.shape), unbroadcast(-g, tb.shape)),
    )


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    ta, tb = _pair(a, b)
    _broadcast_shape(ta, tb, "mul")
    out = ta.data * tb.data
    return apply_op(
        "mul",
        out,
        (ta, tb),
        lambda g: (unbroadcast(g * tb.data, ta.shape), unbroadcast(g * ta.data, tb.shape)),
    )


def div(a: ArrayLike, b: ArrayLike) -> Tensor:
    ta, tb = _pair(a, b)
    _broadcast_shape(ta, tb, "div")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = ta.data / tb.data

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return (
            unbroadcast(g / tb.data, ta.shape),
            unbroadcast(-g * ta.data / (tb.data * tb.data), tb.shape),
        )

    return apply_op("div", out, (ta, tb), backward)


# ----------------------------------------------------------------------
# Elementwise unary
# ----------------------------------------------------------------------
def neg(x: ArrayLike) -> Tensor:
    t = as_tensor(x)
    return apply_op("neg", -t.data, (t,), lambda g: (-g,))


def power(x: ArrayLike, exponent: float) -> Tensor:
    t = as_tensor(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.power(t.data, exponent)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * exponent * np.power(t.data, exponent - 1),)

    return apply_op("power", out, (t,), backward)


def exp(x: ArrayLike) -> Tensor:
    t = as_tensor(x)
    with np.errstate(over="ignore"):
        out = np.exp(t.data)
    return apply_op("exp", out, (t,), lambda g: (g * out,))


def log(x: ArrayLike) -> Tensor:
    t = as_tensor(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(t.data)
    return apply_op("log", out, (t,), lambda g: (g / t.data,))


def tanh(x: ArrayLike) -> Tensor:
    t = as_tensor(x)
    out = np.tanh(t.data)
    return apply_op("tanh", out, (t,), lambda g: (g * (1.0 - out * out),))


def _sigmoid(values: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * values))


def sigmoid(x: ArrayLike) -> Tensor:
    t = as_tensor(x)
    out = _sigmoid(t.data)
    return apply_op("sigmoid", out, (t,), lambda g: (g * out * (1.0 - out),))


def softplus(x: ArrayLike) -> Tensor:
    """log(1 + e^x), evaluated without overflow."""
    t = as_tensor(x)
    out = np.logaddexp(0.0, t.data).astype(t.dtype, copy=False)
    return apply_op("softplus", out, (t,), lambda g: (g * _sigmoid(t.data),))


def silu(x: ArrayLike) -> Tensor:
    t = as_tensor(x)
    sig = _sigmoid(t.data)
    out = t.data * sig

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * (sig * (1.0 + t.data * (1.0 - sig))),)

    return apply_op("silu", out, (t,), backward)


# ----------------------------------------------------------------------
# Linear algebra
# ----------------------------------------------------------------------
def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    """
    Batched matrix product a[..., m, k] @ b[..., k, n] -> [..., m, n].

    Leading extents broadcast. Inner extents must agree.
    """
    ta, tb = _pair(a, b)
    if ta.ndim < 2 or tb.ndim < 2:
        raise DimensionError(
            f"matmul needs operands with at least 2 dims, got shapes {ta.shape} and {tb.shape}"
        )
    if ta.shape[-1] != tb.shape[-2]:
        raise DimensionError(
            f"matmul inner extents differ: {ta.shape} @ {tb.shape} "
            f"({ta.shape[-1]} != {tb.shape[-2]})"
        )
    try:
        np.broadcast_shapes(ta.shape[:-2], tb.shape[:-2])
    except ValueError as exc:
        raise DimensionError(
            f"matmul leading extents do not broadcast: {ta.shape} @ {tb.shape}"
        ) from exc
    out = np.matmul(ta.data, tb.data)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ga = np.matmul(g, np.swapaxes(tb.data, -1, -2))
        gb = np.matmul(np.swapaxes(ta.data, -1, -2), g)
        return unbroadcast(ga, ta.shape), unbroadcast(gb, tb.shape)

    return apply_op("matmul", out, (ta, tb), backward)


# ----------------------------------------------------------------------
# Reductions
# ----------------------------------------------------------------------
def _normalize_axes(axis: int | Sequence[int] | None, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    return tuple(a % ndim for a in axes)


def sum(x: ArrayLike, axis: int | Sequence[int] | None = None, keepdims: bool = False) -> Tensor:
    t = as_tensor(x)
    axes = _normalize_axes(axis, t.ndim)
    out = np.sum(t.data, axis=axes, keepdims=keepdims)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, t.shape).copy(),)

    return apply_op("sum", np.asarray(out), (t,), backward)


def mean(x: ArrayLike, axis: int | Sequence[int] | None = None, keepdims: bool = False) -> Tensor:
    t = as_tensor(x)
    axes = _normalize_axes(axis, t.ndim)
    count = int(np.prod([t.shape[a] for a in axes])) if axes else 1
    if count == 0:
        raise DimensionError(f"mean over empty axes {axes} of shape {t.shape}")
    out = np.mean(t.data, axis=axes, keepdims=keepdims)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g / count, t.shape).copy(),)

    return apply_op("mean", np.asarray(out), (t,), backward)


def softmax(x: ArrayLike, axis: int = -1) -> Tensor:
    """Max-stabilized softmax along ``axis``."""
    t = as_tensor(x)
    if t.ndim == 0:
        raise DimensionError("softmax needs at least one axis")
    axis = axis % t.ndim
    if t.shape[axis] == 0:
        raise DimensionError(f"softmax over empty axis {axis} of shape {t.shape}")
    shifted = t.data - np.max(t.data, axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / np.sum(e, axis=axis, keepdims=True)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        dot = np.sum(g * out, axis=axis, keepdims=True)
        return (out * (g - dot),)

    return apply_op("softmax", out, (t,), backward)


# ----------------------------------------------------------------------
# Shape manipulation
# ----------------------------------------------------------------------
def reshape(x: ArrayLike, shape: Sequence[int]) -> Tensor:
    t = as_tensor(x)
    try:
        out = t.data.reshape(tuple(shape))
    except ValueError as exc:
        raise DimensionError(f"cannot reshape {t.shape} to {tuple(shape)}") from exc
    return apply_op("reshape", out, (t,), lambda g: (g.reshape(t.shape),))


def expand_dims(x: ArrayLike, axis: int) -> Tensor:
    t = as_tensor(x)
    out = np.expand_dims(t.data, axis)
    return apply_op("expand_dims", out, (t,), lambda g: (g.reshape(t.shape),))


def transpose(x: ArrayLike, axes: Sequence[int] | None = None) -> Tensor:
    t = as_tensor(x)
    perm = tuple(range(t.ndim))[::-1] if axes is None else tuple(a % t.ndim for a in axes)
    if sorted(perm) != list(range(t.ndim)):
        raise DimensionError(f"invalid permutation {perm} for shape {t.shape}")
    inverse = tuple(np.argsort(perm))
    out = np.transpose(t.data, perm)
    return apply_op("transpose", out, (t,), lambda g: (np.transpose(g, inverse),))


def getitem(x: ArrayLike, index: Any) -> Tensor:
    """Basic slicing and integer-array indexing; gradients scatter-add back."""
    t = as_tensor(x)
    out = np.asarray(t.data[index])

    parts = index if isinstance(index, tuple) else (index,)
    advanced = any(isinstance(part, (np.ndarray, list)) for part in parts)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        grad = np.zeros_like(t.data)
        if advanced:
            np.add.at(grad, index, g)
        else:
            grad[index] = g
        return (grad,)

    return apply_op("getitem", out.copy(), (t,), backward)


def concat(tensors: Sequence[ArrayLike], axis: int = 0) -> Tensor:
    items = [as_tensor(v) for v in tensors]
    if not items:
        raise DimensionError("concat needs at least one tensor")
    try:
        out = np.concatenate([t.data for t in items], axis=axis)
    except ValueError as exc:
        shapes = [t.shape for t in items]
        raise DimensionError(f"cannot concat shapes {shapes} along axis {axis}") from exc
    splits = np.cumsum([t.shape[axis] for t in items])[:-1]

    def backward(g: np.ndarray) -> list[np.ndarray]:
        return [np.ascontiguousarray(part) for part in np.split(g, splits, axis=axis)]

    return apply_op("concat", out, items, backward)


def stack(tensors: Sequence[ArrayLike], axis: int = 0) -> Tensor:
    items = [as_tensor(v) for v in tensors]
    if not items:
        raise DimensionError("stack needs at least one tensor")
    try:
        out = np.stack([t.data for t in items], axis=axis)
    except ValueError as exc:
        shapes = [t.shape for t in items]
        raise DimensionError(f"cannot stack shapes {shapes}") from exc

    def backward(g: np.ndarray) -> list[np.ndarray]:
        return [np.take(g, i, axis=axis) for i in builtins.range(len(items))]

    return apply_op("stack", out, items, backward)


# ----------------------------------------------------------------------
# Regularization
# ----------------------------------------------------------------------
def dropout(x: ArrayLike, rate: float, rng: np.random.Generator | None, training: bool) -> Tensor:
    """Inverted dropout; identity when not training or rate == 0."""
    t = as_tensor(x)
    if not training or rate <= 0.0 or rng is None:
        return t
    keep = (rng.random(t.shape) >= rate).astype(t.dtype) / (1.0 - rate)
    return mul(t, Tensor(keep, dtype=t.dtype))
