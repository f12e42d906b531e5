"""
Legendre polynomial evaluation.

P_n is evaluated with the three-term (Bonnet) recurrence
    (k+1) P_{k+1}(x) = (2k+1) x P_k(x) − k P_{k−1}(x)
which is stable on [−1, 1]. The normalized basis g_n = √((2n+1)/2) P_n has
unit L2 norm on [−1, 1]. Multivariate polynomials are tensor products.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from library.errors import DomainError

DOMAIN_SLACK = 1e-12


def _check_domain(x: np.ndarray) -> None:
    if np.any(np.abs(x) > 1.0 + DOMAIN_SLACK):
        worst = float(np.max(np.abs(x)))
        raise DomainError(f"Legendre argument outside [-1, 1]: |x| = {worst}")


def legendre_table(max_degree: int, x: float | np.ndarray) -> np.ndarray:
    """
    Evaluate P_0..P_max_degree at ``x``.

    Args:
        max_degree: Highest degree (>= 0)
        x: Scalar or array of points in [−1, 1]

    Returns:
        Array of shape (max_degree + 1, *x.shape)
    """
    if max_degree < 0:
        raise ValueError(f"degree must be >= 0, got {max_degree}")
    points = np.asarray(x, dtype=np.float64)
    _check_domain(points)
    table = np.empty((max_degree + 1,) + points.shape, dtype=np.float64)
    table[0] = 1.0
    if max_degree >= 1:
        table[1] = points
    for k in range(1, max_degree):
        table[k + 1] = ((2 * k + 1) * points * table[k] - k * table[k - 1]) / (k + 1)
    return table


def eval_legendre(n: int, x: float | np.ndarray) -> float | np.ndarray:
    """P_n(x) by the Bonnet recurrence (scalar in, scalar out)."""
    value = legendre_table(n, x)[n]
    return float(value) if np.ndim(value) == 0 else value


def eval_normalized(n: int, x: float | np.ndarray) -> float | np.ndarray:
    """g_n(x) = √((2n+1)/2) · P_n(x), orthonormal on [−1, 1]."""
    value = math.sqrt((2 * n + 1) / 2.0) * legendre_table(n, x)[n]
    return float(value) if np.ndim(value) == 0 else value


def normalized_table(max_degree: int, x: float | np.ndarray) -> np.ndarray:
    """g_0..g_max_degree at ``x``, shape (max_degree + 1, *x.shape)."""
    table = legendre_table(max_degree, x)
    scale = np.sqrt((2.0 * np.arange(max_degree + 1) + 1.0) / 2.0)
    return table * scale.reshape((-1,) + (1,) * (table.ndim - 1))


def eval_multivariate(idx: Sequence[int], point: Sequence[float]) -> float:
    """
    Tensor-product Legendre polynomial Π_c P_{n_c}(x_c).

    Args:
        idx: Multi-index (n_1, ..., n_C)
        point: Coordinates (x_1, ..., x_C)
    """
    if len(idx) != len(point):
        raise ValueError(
            f"multi-index has {len(idx)} channels but point has {len(point)} coordinates"
        )
    if len(idx) == 0:
        raise ValueError("multi-index needs at least one channel")
    result = 1.0
    for degree, coordinate in zip(idx, point):
        result *= float(eval_legendre(int(degree), float(coordinate)))
    return result
