"""
Gauss–Legendre quadrature.

Nodes are the roots of P_n found by Newton iteration from the classical
cos(π(i − 1/4)/(n + 1/2)) initial guesses; weights are
2 / ((1 − x²) P_n'(x)²). An n-point rule integrates polynomials of degree
≤ 2n − 1 exactly on [−1, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from library.errors import NumericError

NEWTON_TOL = 1e-14
NEWTON_MAX_ITER = 100


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes in [−1, 1] with positive weights summing to 2."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def integrate(self, values: np.ndarray) -> float:
        """Σ w_i f(x_i) for values sampled at the nodes."""
        return float(np.dot(self.weights, values))

    def scaled(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights mapped to [a, b]."""
        half = 0.5 * (b - a)
        return a + half * (self.nodes + 1.0), half * self.weights


def _legendre_and_derivative(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(1, n):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    derivative = n * (x * p - p_prev) / (x * x - 1.0)
    return p, derivative


@lru_cache(maxsize=64)
def _rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order == 1:
        return np.array([0.0]), np.array([2.0])
    i = np.arange(1, order + 1, dtype=np.float64)
    x = np.cos(np.pi * (i - 0.25) / (order + 0.5))
    for _ in range(NEWTON_MAX_ITER):
        p, dp = _legendre_and_derivative(order, x)
        step = p / dp
        x = x - step
        if np.max(np.abs(step)) < NEWTON_TOL:
            break
    else:
        raise NumericError(f"Gauss-Legendre Newton iteration did not converge for order {order}")
    _, dp = _legendre_and_derivative(order, x)
    weights = 2.0 / ((1.0 - x * x) * dp * dp)
    order_idx = np.argsort(x)
    return x[order_idx], weights[order_idx]


def gauss_legendre(order: int) -> QuadratureRule:
    """
    Build an ``order``-point Gauss–Legendre rule on [−1, 1].

    Args:
        order: Number of nodes (>= 1)

    Returns:
        QuadratureRule with ascending nodes
    """
    if order < 1:
        raise ValueError(f"quadrature order must be >= 1, got {order}")
    nodes, weights = _rule(order)
    return QuadratureRule(nodes=nodes.copy(), weights=weights.copy(), order=order)
