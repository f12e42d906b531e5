"""LCM, MOPA, gate and order combining, the ablation variants and the full-projection reference."""

from library.polyops.operators import (
    LOW_ORDERS,
    VARIANTS,
    GateDecision,
    PolyParams,
    StateTransform,
    gate_combine,
    get_transform,
    lcm_apply,
    mopa_apply,
    order_combine,
    poly_state_transform,
)
from library.polyops.reference import (
    FullProjectionRef,
    expand_coefficients,
    full_projection_reference,
    order_blocks,
)

__all__ = [
    "FullProjectionRef",
    "GateDecision",
    "LOW_ORDERS",
    "PolyParams",
    "StateTransform",
    "VARIANTS",
    "expand_coefficients",
    "full_projection_reference",
    "gate_combine",
    "get_transform",
    "lcm_apply",
    "mopa_apply",
    "order_blocks",
    "order_combine",
    "poly_state_transform",
]
