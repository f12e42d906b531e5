"""
Channel-dependency operators acting on the SSM state h_t → h′_t.

The state is handled channel-major, [..., C, N] (C channels, N Legendre
orders), so that:

- LCM mixes channels per order: out[..., :, n] = L · h[..., :, n]
- MOPA scales every (channel, order) slot: out = M ⊙ h
- the gate is an elementwise two-way softmax over (P_L·LCM, P_M·MOPA)
- order combining keeps the LCM result for orders {0, 1} and the gated
  mixture for orders ≥ 2

Each ablation variant is a ``StateTransform`` registered by name. With
L = I, M = 1, P_L = P_M = 0 every variant reduces to the identity.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, ClassVar

import numpy as np

from library.errors import DimensionError
from library.numerics import DEFAULT_DTYPE, Parameter, Tensor, ops

LOW_ORDERS = 2


@dataclass(frozen=True)
class GateDecision:
    """Elementwise gates; g_l + g_m == 1."""

    g_l: Tensor
    g_m: Tensor


@dataclass
class PolyParams:
    """
    Parameters of one layer's state transform.

    Attributes:
        variant: Registered StateTransform name
        l_mat: (C, C) channel-mixing matrix, or None when the variant has no LCM
        m_mat: (C, N − 2) Hadamard weights ((C, N) for ``gate_only``), or None
        p_l: (1,) gate scale for the LCM branch, or None
        p_m: (1,) gate scale for the MOPA branch, or None
    """

    variant: str
    l_mat: Parameter | None = None
    m_mat: Parameter | None = None
    p_l: Parameter | None = None
    p_m: Parameter | None = None

    @classmethod
    def init(
        cls,
        channels: int,
        state_size: int,
        variant: str = "full",
        dtype: str = DEFAULT_DTYPE,
        prefix: str = "poly",
    ) -> PolyParams:
        """Degenerate start: L = I, M = 1, P_L = P_M = 0."""
        transform = get_transform(variant)
        transform.check_state_size(state_size)
        params = cls(variant=variant)
        if transform.uses_lcm:
            params.l_mat = Parameter(np.eye(channels), f"{prefix}.l_mat", dtype)
        if transform.uses_mopa:
            width = state_size if transform.mopa_all_orders else state_size - LOW_ORDERS
            params.m_mat = Parameter(np.ones((channels, width)), f"{prefix}.m_mat", dtype)
        if transform.uses_gate:
            params.p_l = Parameter(np.zeros(1), f"{prefix}.p_l", dtype)
            params.p_m = Parameter(np.zeros(1), f"{prefix}.p_m", dtype)
        return params

    def parameters(self) -> list[Parameter]:
        return [p for p in (self.l_mat, self.m_mat, self.p_l, self.p_m) if p is not None]


# ----------------------------------------------------------------------
# Component operators
# ----------------------------------------------------------------------
def lcm_apply(h: Tensor, l_mat: Tensor) -> Tensor:
    """
    Linear channel mixing per order.

    Args:
        h: [..., C, N] channel-major state
        l_mat: [C, C]

    Returns:
        [..., C, N] with out[..., :, n] = L · h[..., :, n]
    """
    channels = h.shape[-2]
    if l_mat.shape != (channels, channels):
        raise DimensionError(f"L has shape {l_mat.shape}, state has {channels} channels")
    return ops.matmul(l_mat, h)


def mopa_apply(h_high: Tensor, m_mat: Tensor) -> Tensor:
    """Hadamard weighting out[..., c, k] = M[c, k] · h[..., c, k]."""
    if h_high.shape[-2:] != m_mat.shape:
        raise DimensionError(
            f"M has shape {m_mat.shape}, state slice has trailing shape {h_high.shape[-2:]}"
        )
    return h_high * m_mat


def gate_combine(
    lcm_high: Tensor, mopa_high: Tensor, p_l: Tensor, p_m: Tensor
) -> tuple[Tensor, GateDecision]:
    """
    Gated convex mixture of the two branches.

    (g_L, g_M) = softmax over the pair (P_L · lcm_high, P_M · mopa_high), taken
    elementwise; mix = g_L ⊙ lcm_high + g_M ⊙ mopa_high.
    """
    if lcm_high.shape != mopa_high.shape:
        raise DimensionError(f"gate inputs differ: {lcm_high.shape} vs {mopa_high.shape}")
    logits = ops.stack([p_l * lcm_high, p_m * mopa_high], axis=-1)
    gates = ops.softmax(logits, axis=-1)
    g_l, g_m = gates[..., 0], gates[..., 1]
    mix = g_l * lcm_high + g_m * mopa_high
    return mix, GateDecision(g_l=g_l, g_m=g_m)


def order_combine(lcm_full: Tensor, mix: Tensor) -> Tensor:
    """Concatenate LCM orders {0, 1} with the mixture for orders ≥ 2."""
    n = lcm_full.shape[-1]
    if n <= LOW_ORDERS:
        raise DimensionError(f"order combining needs N >= 3, got N = {n}")
    expected = lcm_full.shape[:-1] + (n - LOW_ORDERS,)
    if mix.shape != expected:
        raise DimensionError(f"mix has shape {mix.shape}, expected {expected}")
    return ops.concat([lcm_full[..., :LOW_ORDERS], mix], axis=-1)


# ----------------------------------------------------------------------
# Variants
# ----------------------------------------------------------------------
Trace = dict[str, Any]


def _record(trace: Trace | None, **values: Tensor) -> None:
    if trace is not None:
        for key, value in values.items():
            trace[key] = value.data.copy()


class StateTransform(ABC):
    """Maps the channel-major state [..., C, N] to h′."""

    name: ClassVar[str]
    uses_lcm: ClassVar[bool] = False
    uses_mopa: ClassVar[bool] = False
    uses_gate: ClassVar[bool] = False
    mopa_all_orders: ClassVar[bool] = False
    min_state_size: ClassVar[int] = 1

    def check_state_size(self, state_size: int) -> None:
        if state_size < self.min_state_size:
            raise DimensionError(
                f"variant {self.name!r} needs N >= {self.min_state_size}, got N = {state_size}"
            )

    @abstractmethod
    def apply(self, h: Tensor, params: PolyParams, trace: Trace | None = None) -> Tensor:
        """Transform a channel-major state."""


class FullTransform(StateTransform):
    """LCM on all orders, MOPA on orders ≥ 2, gated mixture spliced above the low orders."""

    name = "full"
    uses_lcm = uses_mopa = uses_gate = True
    min_state_size = 3

    def apply(self, h: Tensor, params: PolyParams, trace: Trace | None = None) -> Tensor:
        assert params.l_mat is not None and params.m_mat is not None
        assert params.p_l is not None and params.p_m is not None
        lcm_full = lcm_apply(h, params.l_mat)
        high = h[..., LOW_ORDERS:]
        mopa_high = mopa_apply(high, params.m_mat)
        mix, decision = gate_combine(
            lcm_full[..., LOW_ORDERS:], mopa_high, params.p_l, params.p_m
        )
        _record(trace, pre_mopa=high, post_mopa=mopa_high, gate_l=decision.g_l)
        return order_combine(lcm_full, mix)


class GateOnlyTransform(StateTransform):
    """Gate between LCM and MOPA over every order, no low-order splice."""

    name = "gate_only"
    uses_lcm = uses_mopa = uses_gate = True
    mopa_all_orders = True

    def apply(self, h: Tensor, params: PolyParams, trace: Trace | None = None) -> Tensor:
        assert params.l_mat is not None and params.m_mat is not None
        assert params.p_l is not None and params.p_m is not None
        lcm_full = lcm_apply(h, params.l_mat)
        mopa_full = mopa_apply(h, params.m_mat)
        mix, decision = gate_combine(lcm_full, mopa_full, params.p_l, params.p_m)
        _record(trace, pre_mopa=h, post_mopa=mopa_full, gate_l=decision.g_l)
        return mix


class NoLcmTransform(StateTransform):
    """Orders {0, 1} pass through; MOPA on orders ≥ 2; no gate."""

    name = "no_lcm"
    uses_mopa = True
    min_state_size = 3

    def apply(self, h: Tensor, params: PolyParams, trace: Trace | None = None) -> Tensor:
        assert params.m_mat is not None
        high = h[..., LOW_ORDERS:]
        mopa_high = mopa_apply(high, params.m_mat)
        _record(trace, pre_mopa=high, post_mopa=mopa_high)
        return ops.concat([h[..., :LOW_ORDERS], mopa_high], axis=-1)


class NoMopaTransform(StateTransform):
    """LCM on every order."""

    name = "no_mopa"
    uses_lcm = True

    def apply(self, h: Tensor, params: PolyParams, trace: Trace | None = None) -> Tensor:
        assert params.l_mat is not None
        return lcm_apply(h, params.l_mat)


class VanillaTransform(StateTransform):
    """Identity: the plain selective SSM."""

    name = "vanilla"

    def apply(self, h: Tensor, params: PolyParams, trace: Trace | None = None) -> Tensor:
        return h


_REGISTRY: dict[str, StateTransform] = {
    t.name: t
    for t in (
        FullTransform(),
        GateOnlyTransform(),
        NoLcmTransform(),
        NoMopaTransform(),
        VanillaTransform(),
    )
}

VARIANTS: tuple[str, ...] = tuple(_REGISTRY)


def get_transform(variant: str) -> StateTransform:
    """Look up a registered StateTransform by name."""
    try:
        return _REGISTRY[variant]
    except KeyError:
        raise ValueError(
            f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}"
        ) from None


def _channel_major_axes(ndim: int) -> tuple[int, ...]:
    # [B, C, ..., D, N] -> [B, ..., D, C, N]
    return (0, *range(2, ndim - 1), 1, ndim - 1)


def poly_state_transform(h: Tensor, p: PolyParams, trace: Trace | None = None) -> Tensor:
    """
    h_t → h′_t for a state laid out [batch, C, D, N] (or [batch, C, L, D, N]).

    The state is reshaped to channel-major, transformed by the variant named
    in ``p``, and reshaped back. ``trace`` (optional) receives copies of the
    gate values and the states entering and leaving MOPA, channel-major.

    Args:
        h: State with channels on axis 1 and orders on the last axis
        p: Layer parameters
        trace: Dict to fill with diagnostics

    Returns:
        Transformed state, same layout as ``h``
    """
    if h.ndim < 4:
        raise DimensionError(f"state must be [batch, C, ..., D, N], got shape {h.shape}")
    transform = get_transform(p.variant)
    transform.check_state_size(h.shape[-1])
    if isinstance(transform, VanillaTransform):
        return h
    axes = _channel_major_axes(h.ndim)
    inverse = tuple(int(i) for i in np.argsort(axes))
    channel_major = ops.transpose(h, axes)
    transformed = transform.apply(channel_major, p, trace)
    return ops.transpose(transformed, inverse)
