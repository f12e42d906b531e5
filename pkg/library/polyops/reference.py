"""
Two-step multivariate expansion and projection, kept as a desk-scale reference.

Step one expands C univariate coefficient vectors into tensor-product
coefficients Π_c c[c, n_c] over multi-indices. They are laid out in one block
per order n, and block n holds every multi-index of total degree ≤ n
(count_degree(C, n) entries), so the full vector has count_total(C, N_deg)
entries. Step two projects each block back to one value per order:

    out_n = f(Σ_i W[i, n] · coeff_i + b_n),  i ranging over block n

The in-network operator replaces this with the Hadamard MOPA product; this
module validates dimensions of that simplification only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from library.errors import DimensionError
from library.legendre import count_degree, count_total, enumerate_multi_indices

Activation = Literal["identity", "tanh"]

MAX_REFERENCE_CHANNELS = 3
MAX_REFERENCE_DEGREE = 4


def order_blocks(channels: int, n_deg: int) -> list[slice]:
    """Slices of the expanded vector belonging to each order 0..n_deg."""
    blocks = []
    start = 0
    for n in range(n_deg + 1):
        size = count_degree(channels, n)
        blocks.append(slice(start, start + size))
        start += size
    return blocks


@dataclass(frozen=True)
class FullProjectionRef:
    """
    Projection weights of the two-step construction.

    Attributes:
        channels: C
        n_deg: Highest order N_deg
        w: (N_Φ, N_deg + 1); only entries of block n feed output n
        bias: (N_deg + 1,)
        activation: "identity" or "tanh"
    """

    channels: int
    n_deg: int
    w: np.ndarray
    bias: np.ndarray
    activation: Activation = "identity"

    def __post_init__(self) -> None:
        if not 1 <= self.channels <= MAX_REFERENCE_CHANNELS:
            raise ValueError(
                f"reference supports 1..{MAX_REFERENCE_CHANNELS} channels, got {self.channels}"
            )
        if not 0 <= self.n_deg <= MAX_REFERENCE_DEGREE:
            raise ValueError(
                f"reference supports degree 0..{MAX_REFERENCE_DEGREE}, got {self.n_deg}"
            )
        expected = (self.n_phi, self.n_deg + 1)
        if self.w.shape != expected:
            raise DimensionError(f"W has shape {self.w.shape}, expected {expected}")
        if self.bias.shape != (self.n_deg + 1,):
            raise DimensionError(f"bias has shape {self.bias.shape}, expected ({self.n_deg + 1},)")
        if self.activation not in ("identity", "tanh"):
            raise ValueError(f"activation must be 'identity' or 'tanh', got {self.activation!r}")

    @property
    def n_phi(self) -> int:
        return count_total(self.channels, self.n_deg)

    @classmethod
    def averaging(
        cls, channels: int, n_deg: int, activation: Activation = "identity"
    ) -> FullProjectionRef:
        """Weights averaging each block, zero bias."""
        w = np.zeros((count_total(channels, n_deg), n_deg + 1))
        for n, block in enumerate(order_blocks(channels, n_deg)):
            w[block, n] = 1.0 / (block.stop - block.start)
        return cls(channels, n_deg, w, np.zeros(n_deg + 1), activation)

    @classmethod
    def random(
        cls, channels: int, n_deg: int, rng: np.random.Generator, activation: Activation = "tanh"
    ) -> FullProjectionRef:
        mask = np.zeros((count_total(channels, n_deg), n_deg + 1))
        for n, block in enumerate(order_blocks(channels, n_deg)):
            mask[block, n] = 1.0
        w = rng.normal(0.0, 1.0, mask.shape) * mask
        return cls(channels, n_deg, w, rng.normal(0.0, 0.1, n_deg + 1), activation)


def expand_coefficients(coeffs: np.ndarray, n_deg: int) -> np.ndarray:
    """
    Tensor-product expansion of univariate coefficients.

    Args:
        coeffs: (C, N_deg + 1) univariate coefficients per channel
        n_deg: Highest order

    Returns:
        (count_total(C, N_deg),) expanded coefficients in per-order blocks
    """
    values = np.asarray(coeffs, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != n_deg + 1:
        raise DimensionError(f"coefficients must be (C, {n_deg + 1}), got {values.shape}")
    channels = values.shape[0]
    blocks = []
    for n in range(n_deg + 1):
        indices = enumerate_multi_indices(channels, n)
        blocks.append(
            np.array([np.prod([values[c, k] for c, k in enumerate(idx)]) for idx in indices])
        )
    return np.concatenate(blocks)


def full_projection_reference(coeffs: np.ndarray, ref: FullProjectionRef) -> np.ndarray:
    """
    Project the expanded coefficients to one value per order.

    Args:
        coeffs: Expanded coefficients, length count_total(C, N_deg)
        ref: Projection weights

    Returns:
        (N_deg + 1,) projected coefficients
    """
    values = np.asarray(coeffs, dtype=np.float64).reshape(-1)
    if values.shape[0] != ref.n_phi:
        raise DimensionError(
            f"expected count_total(C={ref.channels}, N={ref.n_deg}) = {ref.n_phi} "
            f"coefficients, got {values.shape[0]}"
        )
    out = np.empty(ref.n_deg + 1)
    for n, block in enumerate(order_blocks(ref.channels, ref.n_deg)):
        out[n] = values[block] @ ref.w[block, n] + ref.bias[n]
    return np.tanh(out) if ref.activation == "tanh" else out
