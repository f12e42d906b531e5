"""Univariate and multivariate Legendre polynomials, quadrature and basis checks."""

from library.legendre.basis import (
    MultiIndex,
    count_degree,
    count_total,
    enumerate_multi_indices,
    gram_matrix,
)
from library.legendre.polynomials import (
    eval_legendre,
    eval_multivariate,
    eval_normalized,
    legendre_table,
    normalized_table,
)
from library.legendre.quadrature import QuadratureRule, gauss_legendre

__all__ = [
    "MultiIndex",
    "QuadratureRule",
    "count_degree",
    "count_total",
    "enumerate_multi_indices",
    "eval_legendre",
    "eval_multivariate",
    "eval_normalized",
    "gauss_legendre",
    "gram_matrix",
    "legendre_table",
    "normalized_table",
]
