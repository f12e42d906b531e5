"""Adam optimizer over named Parameters."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from library.numerics import Parameter


class Adam:
    """
    Adam with bias-corrected first and second moments.

        m ← β₁ m + (1 − β₁) g
        v ← β₂ v + (1 − β₂) g²
        θ ← θ − lr · m̂ / (√v̂ + ε) − lr · weight_decay · θ

    Args:
        params: Parameters to update in place
        lr: Learning rate (>= 0; 0 leaves parameters untouched)
        betas: (β₁, β₂)
        eps: Denominator floor
        weight_decay: Decoupled shrinkage rate
    """

    def __init__(
        self,
        params: Iterable[Parameter],
        lr: float = 1e-4,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.0,
    ):
        if lr < 0:
            raise ValueError(f"lr must be >= 0, got {lr}")
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.steps = 0
        self._m = {p.name: np.zeros_like(p.data) for p in self.params}
        self._v = {p.name: np.zeros_like(p.data) for p in self.params}

    def zero_grad(self) -> None:
        for param in self.params:
            param.zero_grad()

    def step(self) -> None:
        self.steps += 1
        if self.lr == 0.0:
            return
        correction1 = 1.0 - self.beta1**self.steps
        correction2 = 1.0 - self.beta2**self.steps
        for param in self.params:
            g = param.grad.astype(param.dtype, copy=False)
            m, v = self._m[param.name], self._v[param.name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            update = self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
            if self.weight_decay:
                update = update + self.lr * self.weight_decay * param.data
            param.assign(param.data - update)

    def state_dict(self) -> dict[str, object]:
        return {
            "steps": self.steps,
            "m": {k: v.copy() for k, v in self._m.items()},
            "v": {k: v.copy() for k, v in self._v.items()},
        }
