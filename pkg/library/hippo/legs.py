"""
HiPPO-LegS operator.

The scaled-Legendre measure gives the linear ODE dc/dT = (A c + B u(T)) / T
with a lower-triangular A. Coefficients are taken against the orthonormal
basis g_n on [−1, 1], which scales the classical B by √2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LegsOperator:
    """
    LegS state matrices.

    Attributes:
        A: (N, N) lower-triangular matrix, A_nk = −√((2n+1)(2k+1)) for n > k,
            A_nn = −(n+1)
        B: (N,) input vector, B_n = √(2(2n+1))
    """

    A: np.ndarray
    B: np.ndarray

    @property
    def n(self) -> int:
        return int(self.B.shape[0])

    def leading(self, k: int) -> LegsOperator:
        """Operator restricted to the first ``k`` orders."""
        if not 1 <= k <= self.n:
            raise ValueError(f"leading block size must be in [1, {self.n}], got {k}")
        return LegsOperator(A=self.A[:k, :k].copy(), B=self.B[:k].copy())

    def derivative(self, c: np.ndarray, u: float, t: float) -> np.ndarray:
        """Right-hand side (A c + B u) / t."""
        return (self.A @ c + self.B * u) / t


def build_legs(n: int) -> LegsOperator:
    """
    Build the LegS operator for ``n`` orders.

    Args:
        n: State size (>= 1)

    Returns:
        LegsOperator with float64 matrices

    Example:
        >>> op = build_legs(2)
        >>> op.A
        array([[-1.        ,  0.        ],
               [-1.73205081, -2.        ]])
    """
    if n < 1:
        raise ValueError(f"state size must be >= 1, got {n}")
    odd = 2.0 * np.arange(n, dtype=np.float64) + 1.0
    a = -np.tril(np.sqrt(np.outer(odd, odd)), k=-1)
    a[np.diag_indices(n)] = -(np.arange(n, dtype=np.float64) + 1.0)
    b = np.sqrt(2.0 * odd)
    return LegsOperator(A=a, B=b)
