"""
Finite-difference gradient oracle.

Compares the gradients produced by ``backward`` against central differences
(f(θ+ε) − f(θ−ε)) / 2ε, element by element, in float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from library.errors import NumericError
from library.numerics.graph import Graph, backward
from library.numerics.tensor import Parameter, Tensor

Objective = Callable[[], Tensor]


@dataclass
class GradCheckReport:
    """Per-parameter maximum relative error and the overall verdict."""

    errors: dict[str, float] = field(default_factory=dict)
    tol: float = 1e-6

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tol

    def worst(self) -> tuple[str, float] | None:
        if not self.errors:
            return None
        name = max(self.errors, key=self.errors.__getitem__)
        return name, self.errors[name]


def _value(f: Objective) -> float:
    out = f()
    if out.size != 1:
        raise ValueError(f"objective must return a scalar, got shape {out.shape}")
    return float(out.data.reshape(-1)[0])


def finite_diff_check(
    f: Objective,
    params: Sequence[Parameter],
    eps: float = 1e-5,
    tol: float = 1e-6,
    floor: float = 1e-6,
) -> GradCheckReport:
    """
    Check analytic gradients of ``f`` against central differences.

    The relative error of a parameter is
    max|analytic − numeric| / max(max|analytic|, max|numeric|, floor).

    Args:
        f: Zero-argument objective returning a scalar Tensor; must be deterministic
        params: float64 Parameters to perturb
        eps: Perturbation size
        tol: Pass threshold on the largest relative error
        floor: Lower bound on the error denominator (keeps all-zero gradients finite)

    Returns:
        GradCheckReport with one entry per parameter

    Raises:
        NumericError: If two baseline evaluations of f differ
    """
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    for param in params:
        if param.dtype != np.float64:
            raise TypeError(
                f"gradient check needs float64 parameters, {param.name} is {param.dtype}"
            )

    baseline = _value(f)
    if _value(f) != baseline:
        raise NumericError("objective is not deterministic: two baseline evaluations differ")

    saved = {id(p): p.grad for p in params}
    for param in params:
        param.zero_grad()
    with Graph() as graph:
        loss = f()
    backward(graph, loss)
    analytic = {id(p): p.grad.copy() for p in params}
    for param in params:
        param.grad = saved[id(param)]

    report = GradCheckReport(tol=tol)
    for param in params:
        flat = param.data.reshape(-1)
        numeric = np.zeros(flat.size, dtype=np.float64)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + eps
            upper = _value(f)
            flat[i] = original - eps
            lower = _value(f)
            flat[i] = original
            numeric[i] = (upper - lower) / (2.0 * eps)
        grad = analytic[id(param)].reshape(-1)
        scale = max(
            float(np.max(np.abs(grad), initial=0.0)),
            float(np.max(np.abs(numeric), initial=0.0)),
            floor,
        )
        report.errors[param.name] = float(np.max(np.abs(grad - numeric), initial=0.0)) / scale
    return report
