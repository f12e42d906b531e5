"""
Input-dependent SSM parameters, discretization and readout.

For an input x_t with model dimension D and state size N:

    delta = softplus(x_t W_delta + b_delta)          [..., D]
    B_t   = x_t W_B                                  [..., N]
    C_t   = x_t W_C                                  [..., N]
    A     = −exp(A_log)                              [D, N]
    A_bar = exp(delta · A)                           zero-order hold
    B_bar_x = delta · B_t · x_t                      Euler drive
    y_t   = Σ_n C_t,n h′_t,n + D_skip ⊙ x_t
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from library.errors import DimensionError, DomainError
from library.numerics import DEFAULT_DTYPE, Parameter, Tensor, ops

DT_MIN = 1e-3
DT_MAX = 1e-1


@dataclass
class SelectiveParams:
    """
    Trainable selective-SSM parameters of one layer.

    Attributes:
        a_log: (D, N) log-magnitude of the diagonal state matrix
        w_delta: (D, D) step-size projection
        b_delta: (D,) step-size bias
        w_b: (D, N) input projection
        w_c: (D, N) output projection
        d_skip: (D,) skip weight
    """

    a_log: Parameter
    w_delta: Parameter
    b_delta: Parameter
    w_b: Parameter
    w_c: Parameter
    d_skip: Parameter

    def __post_init__(self) -> None:
        d, n = self.a_log.shape
        expected = {
            "w_delta": (d, d),
            "b_delta": (d,),
            "w_b": (d, n),
            "w_c": (d, n),
            "d_skip": (d,),
        }
        for field, shape in expected.items():
            actual = getattr(self, field).shape
            if actual != shape:
                raise DimensionError(f"{field} has shape {actual}, expected {shape}")

    @property
    def d_model(self) -> int:
        return int(self.a_log.shape[0])

    @property
    def state_size(self) -> int:
        return int(self.a_log.shape[1])

    @classmethod
    def init(
        cls,
        d_model: int,
        state_size: int,
        rng: np.random.Generator,
        dtype: str = DEFAULT_DTYPE,
        prefix: str = "ssm",
    ) -> SelectiveParams:
        """
        Standard initialization.

        A_log = ln(n + 1) so that A_{d,n} = −(n + 1), the LegS diagonal. The
        step-size bias is the inverse softplus of a log-uniform draw in
        [DT_MIN, DT_MAX]. Projections are N(0, 1/D); D_skip starts at one.
        """
        a_log = np.tile(np.log(np.arange(1, state_size + 1, dtype=np.float64)), (d_model, 1))
        dt = np.exp(rng.uniform(math.log(DT_MIN), math.log(DT_MAX), size=d_model))
        scale = 1.0 / math.sqrt(d_model)
        return cls(
            a_log=Parameter(a_log, f"{prefix}.a_log", dtype),
            w_delta=Parameter(
                rng.normal(0.0, scale, (d_model, d_model)), f"{prefix}.w_delta", dtype
            ),
            b_delta=Parameter(dt + np.log(-np.expm1(-dt)), f"{prefix}.b_delta", dtype),
            w_b=Parameter(rng.normal(0.0, scale, (d_model, state_size)), f"{prefix}.w_b", dtype),
            w_c=Parameter(rng.normal(0.0, scale, (d_model, state_size)), f"{prefix}.w_c", dtype),
            d_skip=Parameter(np.ones(d_model), f"{prefix}.d_skip", dtype),
        )

    def parameters(self) -> list[Parameter]:
        return [self.a_log, self.w_delta, self.b_delta, self.w_b, self.w_c, self.d_skip]


@dataclass(frozen=True)
class DiscretizedStep:
    """Discrete decay A_bar in (0, 1) and input-scaled drive, both [..., D, N]."""

    a_bar: Tensor
    b_bar_x: Tensor

    def __post_init__(self) -> None:
        if self.a_bar.shape != self.b_bar_x.shape:
            raise DimensionError(
                f"a_bar {self.a_bar.shape} and b_bar_x {self.b_bar_x.shape} differ"
            )


def selectivize(x_t: Tensor, p: SelectiveParams) -> tuple[Tensor, Tensor, Tensor]:
    """
    Project the input into (delta, B_t, C_t).

    Args:
        x_t: [..., D] input (any leading dims, e.g. [batch, C, D] or [batch, C, L, D])
        p: Selective parameters

    Returns:
        delta [..., D] (strictly positive), B_t [..., N], C_t [..., N]
    """
    if x_t.shape[-1] != p.d_model:
        raise DimensionError(f"input last dim {x_t.shape[-1]} != model dim {p.d_model}")
    x2 = x_t if x_t.ndim >= 2 else ops.expand_dims(x_t, 0)
    delta = ops.softplus(ops.matmul(x2, p.w_delta) + p.b_delta)
    b_t = ops.matmul(x2, p.w_b)
    c_t = ops.matmul(x2, p.w_c)
    if x_t.ndim < 2:
        delta, b_t, c_t = delta[0], b_t[0], c_t[0]
    return delta, b_t, c_t


def discretize(delta: Tensor, a_log: Tensor, b_t: Tensor, x_t: Tensor) -> DiscretizedStep:
    """
    Zero-order hold on the diagonal A, Euler on the drive.

    Args:
        delta: [..., D] step sizes (> 0)
        a_log: [D, N] log-magnitudes
        b_t: [..., N] input matrix
        x_t: [..., D] input

    Returns:
        DiscretizedStep with [..., D, N] tensors

    Raises:
        DomainError: If any delta is not strictly positive
    """
    if np.any(delta.data <= 0):
        raise DomainError(f"delta must be > 0, got min {float(np.min(delta.data))}")
    if delta.shape != x_t.shape:
        raise DimensionError(f"delta {delta.shape} and x_t {x_t.shape} differ")
    if b_t.shape[:-1] != x_t.shape[:-1] or b_t.shape[-1] != a_log.shape[-1]:
        raise DimensionError(f"B_t {b_t.shape} does not match x_t {x_t.shape} / A {a_log.shape}")
    a = ops.neg(ops.exp(a_log))
    delta_col = ops.expand_dims(delta, -1)
    a_bar = ops.exp(delta_col * a)
    b_bar_x = delta_col * ops.expand_dims(x_t, -1) * ops.expand_dims(b_t, -2)
    return DiscretizedStep(a_bar=a_bar, b_bar_x=b_bar_x)


def readout(h_prime: Tensor, c_t: Tensor, x_t: Tensor, d_skip: Tensor) -> Tensor:
    """
    y = Σ_n C_t,n h′_n + D_skip ⊙ x_t.

    Args:
        h_prime: [..., D, N] transformed state
        c_t: [..., N] output matrix
        x_t: [..., D] input
        d_skip: [D] skip weights

    Returns:
        [..., D] output
    """
    if h_prime.shape[:-1] != x_t.shape or h_prime.shape[-1] != c_t.shape[-1]:
        raise DimensionError(
            f"readout shapes disagree: h' {h_prime.shape}, C_t {c_t.shape}, x_t {x_t.shape}"
        )
    projected = ops.sum(h_prime * ops.expand_dims(c_t, -2), axis=-1)
    return projected + d_skip * x_t
