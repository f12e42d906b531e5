"""
Tensor and Parameter.

A Tensor is a dense row-major array of real numbers (float32 or float64)
backed by a numpy array. Tensors participate in reverse-mode differentiation
when they require gradients and an active Graph records the operations applied
to them. A Parameter is a named trainable leaf carrying its own gradient buffer.
"""

from __future__ import annotations

from typing import Any, Final, Sequence

import numpy as np

from library.errors import NumericError

SUPPORTED_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))

# Parameter dtype for training; oracles and gradient checks ask for float64 explicitly
DEFAULT_DTYPE: Final = "float32"

ArrayLike = Any


def as_dtype(dtype: Any) -> np.dtype:
    """Normalize a dtype spec ("float32", np.float64, ...) to a supported numpy dtype."""
    resolved = np.dtype(dtype)
    if resolved not in SUPPORTED_DTYPES:
        raise TypeError(f"Unsupported dtype {resolved}; expected float32 or float64")
    return resolved


class Tensor:
    """
    Dense real-valued tensor.

    Args:
        data: Array-like values; copied into a contiguous numpy array
        dtype: float32 or float64 (default: inferred, float64 for Python scalars)
        requires_grad: Whether gradients flow into this tensor
    """

    __slots__ = ("data", "requires_grad", "__weakref__")

    def __init__(self, data: ArrayLike, dtype: Any = None, requires_grad: bool = False):
        if isinstance(data, Tensor):
            data = data.data
        array = np.asarray(data)
        if dtype is None:
            dtype = array.dtype if array.dtype in SUPPORTED_DTYPES else np.float64
        self.data: np.ndarray = np.ascontiguousarray(array, dtype=as_dtype(dtype))
        self.requires_grad = requires_grad
        if not np.all(np.isfinite(self.data)):
            raise NumericError("Tensor created with non-finite values")

    # ------------------------------------------------------------------
    # Introspection
    # ------------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        """Return a copy of the underlying values."""
        return self.data.copy()

    def detach(self) -> Tensor:
        """Return a constant tensor sharing no graph history."""
        return Tensor(self.data.copy(), dtype=self.dtype)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    def __len__(self) -> int:
        return self.shape[0]

    # ------------------------------------------------------------------
    # Operator sugar (delegates to differentiable ops)
    # ------------------------------------------------------------------
    def __add__(self, other: ArrayLike) -> Tensor:
        from library.numerics import ops

        return ops.add(self, other)

    def __radd__(self, other: ArrayLike) -> Tensor:
        from library.numerics import ops

        return ops.add(other, self)

    def __sub__(self, other: ArrayLike) -> Tensor:
        from library.numerics import ops

        return ops.sub(self, other)

    def __rsub__(self, other: ArrayLike) -> Tensor:
        from library.numerics import ops

        return ops.sub(other, self)

    def __mul__(self, other: ArrayLike) -> Tensor:
        from library.numerics import ops

        return ops.mul(self, other)

    def __rmul__(self, other: ArrayLike) -> Tensor:
        from library.numerics import ops

        return ops.mul(other, self)

    def __truediv__(self, other: ArrayLike) -> Tensor:
        from library.numerics import ops

        return ops.div(self, other)

    def __rtruediv__(self, other: ArrayLike) -> Tensor:
        from library.numerics import ops

        return ops.div(other, self)

    def __neg__(self) -> Tensor:
        from library.numerics import ops

        return ops.neg(self)

    def __pow__(self, exponent: float) -> Tensor:
        from library.numerics import ops

        return ops.power(self, exponent)

    def __matmul__(self, other: ArrayLike) -> Tensor:
        from library.numerics import ops

        return ops.matmul(self, other)

    def __getitem__(self, index: Any) -> Tensor:
        from library.numerics import ops

        return ops.getitem(self, index)

    def sum(self, axis: int | Sequence[int] | None = None, keepdims: bool = False) -> Tensor:
        from library.numerics import ops

        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: int | Sequence[int] | None = None, keepdims: bool = False) -> Tensor:
        from library.numerics import ops

        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: int) -> Tensor:
        from library.numerics import ops

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def transpose(self, *axes: int) -> Tensor:
        from library.numerics import ops

        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return ops.transpose(self, axes or None)


class Parameter(Tensor):
    """
    Trainable leaf tensor.

    Gradients are accumulated (+=) into ``grad`` by ``backward``; the trainer
    clears them with ``zero_grad`` between steps.

    Args:
        data: Initial values
        name: Identifier used in checkpoints, reports and logs
        dtype: float32 or float64
    """

    __slots__ = ("name", "grad")

    def __init__(self, data: ArrayLike, name: str, dtype: Any = None):
        super().__init__(data, dtype=dtype, requires_grad=True)
        self.name = name
        self.grad: np.ndarray = np.zeros_like(self.data)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def assign(self, values: ArrayLike) -> None:
        """Replace the values in place, keeping shape and dtype."""
        array = np.asarray(values, dtype=self.dtype)
        if array.shape != self.shape:
            raise ValueError(
                f"Cannot assign shape {array.shape} to parameter {self.name} of shape {self.shape}"
            )
        self.data[...] = array

    def __repr__(self) -> str:
        return f"Parameter(name={self.name!r}, shape={self.shape}, dtype={self.dtype})"
