"""
Multivariate Legendre basis: counting, enumeration and orthogonality checks.

The set of C-variate tensor-product polynomials with total degree ≤ n has
binomial(C + n, C) elements. The expanded coefficient space used by the
full-projection construction concatenates one block per order n, so its
dimension is Σ_{d=0}^{N} binomial(C + d, C).
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from library.errors import DomainError
from library.legendre.polynomials import legendre_table
from library.legendre.quadrature import QuadratureRule

MultiIndex = tuple[int, ...]


def count_degree(channels: int, n_deg: int) -> int:
    """Number of C-variate multi-indices with total degree ≤ n_deg: binomial(C + n_deg, C)."""
    if channels < 1:
        raise ValueError(f"channels must be >= 1, got {channels}")
    if n_deg < 0:
        raise ValueError(f"degree must be >= 0, got {n_deg}")
    return math.comb(channels + n_deg, channels)


def count_total(channels: int, max_deg: int) -> int:
    """Dimension of the expanded coefficient space: Σ_{d ≤ max_deg} binomial(C + d, C)."""
    return sum(count_degree(channels, d) for d in range(max_deg + 1))


def enumerate_multi_indices(channels: int, max_deg: int) -> list[MultiIndex]:
    """
    All multi-indices (n_1..n_C) with Σ n_c ≤ max_deg.

    Ordered by total degree, then lexicographically descending within a degree
    (so for C=2, degree 1 lists (1, 0) before (0, 1)).
    """
    if channels < 1:
        raise ValueError(f"channels must be >= 1, got {channels}")
    indices = [
        idx
        for idx in itertools.product(range(max_deg + 1), repeat=channels)
        if sum(idx) <= max_deg
    ]
    return sorted(indices, key=lambda idx: (sum(idx), tuple(-n for n in idx)))


def gram_matrix(channels: int, max_deg: int, rule: QuadratureRule) -> np.ndarray:
    """
    Pairwise inner products of the multivariate Legendre basis up to ``max_deg``.

    Integrals over [−1, 1]^C use the full tensor-product grid of ``rule``.
    Entry (i, j) is ∫ P_{idx_i}(x) P_{idx_j}(x) dx; diagonal entries equal
    Π_c 2/(2 n_c + 1) and off-diagonal entries vanish.

    Args:
        channels: Number of variables C
        max_deg: Highest total degree
        rule: Univariate Gauss rule with order ≥ max_deg + 1

    Returns:
        Symmetric matrix of size len(enumerate_multi_indices(C, max_deg))
    """
    if rule.order < max_deg + 1:
        raise DomainError(
            f"quadrature order {rule.order} is too low for degree {max_deg}; "
            f"need at least {max_deg + 1} nodes"
        )
    indices = enumerate_multi_indices(channels, max_deg)
    # univariate table: [degree, node]
    table = legendre_table(max_deg, rule.nodes)
    grid_weights = rule.weights
    for _ in range(channels - 1):
        grid_weights = np.multiply.outer(grid_weights, rule.weights)
    grid_weights = grid_weights.reshape(-1)

    basis = np.empty((len(indices), grid_weights.size), dtype=np.float64)
    for row, idx in enumerate(indices):
        values = table[idx[0]]
        for degree in idx[1:]:
            values = np.multiply.outer(values, table[degree])
        basis[row] = values.reshape(-1)

    gram = (basis * grid_weights) @ basis.T
    return 0.5 * (gram + gram.T)
