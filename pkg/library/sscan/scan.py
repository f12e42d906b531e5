"""
Linear recurrence h_t = a_t ⊙ h_{t−1} + b_t along a time axis.

Two kernels compute the same states:

- ``sequential_scan``: one step at a time, the reference.
- ``parallel_scan``: Blelloch up-sweep/down-sweep over the pairs (a, b) with
  the associative combine (a₂, b₂) ∘ (a₁, b₁) = (a₂·a₁, a₂·b₁ + b₂). Lanes
  (every non-time position) are split across worker threads; the combine order
  depends only on the tree shape, so results do not depend on the worker count.
  Pairs are combined in float64 and rounded once to the input dtype, so
  float32 results stay within a few ulps of the sequential reference.

``selective_scan`` wraps either kernel as a differentiable primitive. Its
backward pass is itself a linear recurrence run in reverse time, evaluated
with the same kernel.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Literal, Sequence

import numpy as np

from library.errors import DimensionError
from library.numerics import Tensor, apply_op, ops
from library.numerics.ops import unbroadcast

ScanMode = Literal["sequential", "parallel"]

DEFAULT_CHUNK = 128


def _check_pairs(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"scan coefficients {a.shape} and drive {b.shape} differ")
    if a.ndim == 0:
        raise DimensionError("scan needs a leading time axis")


def _initial(h0: np.ndarray | None, lane_shape: tuple[int, ...], dtype: np.dtype) -> np.ndarray:
    if h0 is None:
        return np.zeros(lane_shape, dtype=dtype)
    try:
        return np.broadcast_to(np.asarray(h0, dtype=dtype), lane_shape)
    except ValueError as exc:
        raise DimensionError(
            f"initial state {np.shape(h0)} does not broadcast to {lane_shape}"
        ) from exc


def sequential_scan(a: np.ndarray, b: np.ndarray, h0: np.ndarray | None = None) -> np.ndarray:
    """
    States h_1..h_L of the recurrence over axis 0.

    Args:
        a: (L, ...) multiplicative coefficients
        b: (L, ...) additive drive
        h0: Initial state broadcastable to a.shape[1:] (default zero)

    Returns:
        (L, ...) states
    """
    _check_pairs(a, b)
    h = np.empty_like(b)
    prev = _initial(h0, a.shape[1:], a.dtype)
    for t in range(a.shape[0]):
        prev = a[t] * prev + b[t]
        h[t] = prev
    return h


def _tree_prefix(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inclusive prefix compositions of (size, lanes) pairs; size is a power of two."""
    size = a.shape[0]
    ea, eb = a.copy(), b.copy()

    stride = 1
    while stride < size:
        right = np.arange(2 * stride - 1, size, 2 * stride)
        left = right - stride
        ar = ea[right]
        ea[right] = ar * ea[left]
        eb[right] = ar * eb[left] + eb[right]
        stride *= 2

    ea[size - 1] = 1.0
    eb[size - 1] = 0.0
    stride = size // 2
    while stride >= 1:
        right = np.arange(2 * stride - 1, size, 2 * stride)
        left = right - stride
        la, lb = ea[left].copy(), eb[left].copy()
        pa, pb = ea[right].copy(), eb[right].copy()
        ea[left], eb[left] = pa, pb
        ea[right] = la * pa
        eb[right] = la * pb + lb
        stride //= 2

    # exclusive -> inclusive
    return a * ea, a * eb + b


def _parallel_block(
    a: np.ndarray, b: np.ndarray, h0: np.ndarray, pool: ThreadPoolExecutor | None, workers: int
) -> np.ndarray:
    length = a.shape[0]
    lane_shape = a.shape[1:]
    lanes = int(np.prod(lane_shape, dtype=np.int64))
    size = 1 << max(0, (length - 1).bit_length())

    pa = np.ones((size, lanes), dtype=np.float64)
    pb = np.zeros((size, lanes), dtype=np.float64)
    pa[:length] = a.reshape(length, lanes)
    pb[:length] = b.reshape(length, lanes)

    if pool is None or workers <= 1 or lanes < 2:
        ia, ib = _tree_prefix(pa, pb)
    else:
        parts = np.array_split(np.arange(lanes), min(workers, lanes))
        results = list(pool.map(lambda idx: _tree_prefix(pa[:, idx], pb[:, idx]), parts))
        ia = np.concatenate([r[0] for r in results], axis=1)
        ib = np.concatenate([r[1] for r in results], axis=1)

    h = ia[:length] * h0.reshape(1, lanes) + ib[:length]
    return h.reshape(a.shape)


def parallel_scan(
    a: np.ndarray,
    b: np.ndarray,
    h0: np.ndarray | None = None,
    *,
    workers: int = 1,
    chunk: int | None = None,
) -> np.ndarray:
    """
    Same contract as ``sequential_scan``, evaluated as a work-efficient tree scan.

    Args:
        a: (L, ...) multiplicative coefficients
        b: (L, ...) additive drive
        h0: Initial state broadcastable to a.shape[1:] (default zero)
        workers: Threads sharing the lanes
        chunk: If set, evaluate windows of ``chunk`` steps and carry the boundary state

    Returns:
        (L, ...) states
    """
    _check_pairs(a, b)
    if chunk is not None and chunk < 1:
        raise ValueError(f"chunk must be >= 1, got {chunk}")
    length = a.shape[0]
    state = np.ascontiguousarray(_initial(h0, a.shape[1:], np.dtype(np.float64)))
    if length == 0:
        return np.empty_like(b)
    window = chunk or length
    h = np.empty_like(b)

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for start in range(0, length, window):
            stop = min(start + window, length)
            block = _parallel_block(a[start:stop], b[start:stop], state, pool, workers)
            h[start:stop] = block
            state = block[-1]
    finally:
        if pool is not None:
            pool.shutdown(wait=True)
    return h


def _run(
    a: np.ndarray,
    b: np.ndarray,
    h0: np.ndarray | None,
    mode: ScanMode,
    workers: int,
    chunk: int | None,
) -> np.ndarray:
    if mode == "sequential":
        return sequential_scan(a, b, h0)
    if mode == "parallel":
        return parallel_scan(a, b, h0, workers=workers, chunk=chunk)
    raise ValueError(f"scan mode must be 'sequential' or 'parallel', got {mode!r}")


def selective_scan(
    a_bar: Tensor,
    b_bar_x: Tensor,
    h0: Tensor | None = None,
    *,
    axis: int = 0,
    mode: ScanMode = "parallel",
    workers: int = 1,
    chunk: int | None = None,
) -> Tensor:
    """
    Differentiable linear recurrence along ``axis``.

    Gradients: with adjoint λ_t = G_t + a_{t+1} λ_{t+1} (a reverse-time scan of
    the upstream gradient G), dL/db_t = λ_t, dL/da_t = λ_t h_{t−1} and
    dL/dh0 = a_1 λ_1.

    Args:
        a_bar: Decay coefficients, time along ``axis``
        b_bar_x: Drive, same shape as ``a_bar``
        h0: Initial state broadcastable to one time slice (default zero)
        axis: Time axis
        mode: "sequential" or "parallel"
        workers: Threads for the parallel kernel
        chunk: Window length for chunked evaluation

    Returns:
        States with the shape of ``b_bar_x``
    """
    if a_bar.shape != b_bar_x.shape:
        raise DimensionError(f"a_bar {a_bar.shape} and b_bar_x {b_bar_x.shape} differ")
    axis = axis % a_bar.ndim
    a = np.moveaxis(a_bar.data, axis, 0)
    b = np.moveaxis(b_bar_x.data, axis, 0)
    lane_shape = a.shape[1:]
    h0_data = None if h0 is None else _initial(h0.data, lane_shape, a.dtype)

    h = _run(a, b, h0_data, mode, workers, chunk)
    out = np.moveaxis(h, 0, axis)

    def backward(g: np.ndarray) -> list[np.ndarray | None]:
        grad = np.moveaxis(g, axis, 0)
        coef = np.concatenate([np.zeros_like(a[:1]), a[::-1][:-1]], axis=0)
        lam = _run(coef, np.ascontiguousarray(grad[::-1]), None, mode, workers, chunk)[::-1]
        start = np.zeros(lane_shape, dtype=a.dtype) if h0_data is None else h0_data
        h_prev = np.concatenate([start[None], h[:-1]], axis=0)
        grads: list[np.ndarray | None] = [
            np.moveaxis(lam * h_prev, 0, axis),
            np.moveaxis(lam, 0, axis).copy(),
        ]
        if h0 is not None:
            grads.append(unbroadcast(a[0] * lam[0], h0.shape))
        return grads

    inputs: list[Tensor] = [a_bar, b_bar_x] + ([h0] if h0 is not None else [])
    return apply_op(f"selective_scan[{mode}]", out, inputs, backward)


def scan_sequential(steps: Sequence, h0: Tensor | None = None) -> Tensor:
    """
    Stack per-step DiscretizedSteps and run the reference recurrence.

    Args:
        steps: L DiscretizedStep objects, each with (..., D, N) tensors
        h0: Initial state (default zero)

    Returns:
        (L, ..., D, N) states
    """
    if not steps:
        raise DimensionError("scan needs at least one step")
    a_bar = ops.stack([s.a_bar for s in steps], axis=0)
    b_bar_x = ops.stack([s.b_bar_x for s in steps], axis=0)
    return selective_scan(a_bar, b_bar_x, h0, axis=0, mode="sequential")


def scan_parallel(
    steps: Sequence,
    h0: Tensor | None = None,
    *,
    workers: int = 1,
    chunk: int | None = None,
) -> Tensor:
    """Same contract as ``scan_sequential`` with the tree kernel."""
    if not steps:
        raise DimensionError("scan needs at least one step")
    a_bar = ops.stack([s.a_bar for s in steps], axis=0)
    b_bar_x = ops.stack([s.b_bar_x for s in steps], axis=0)
    return selective_scan(
        a_bar, b_bar_x, h0, axis=0, mode="parallel", workers=workers, chunk=chunk
    )
