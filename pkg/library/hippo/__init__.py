"""HiPPO-LegS operator and online function approximation."""

from library.hippo.approx import (
    CoeffTrajectory,
    InitialState,
    LegsApproximator,
    legs_online_approx,
    project_coefficients,
    reconstruct,
    reconstruct_curve,
)
from library.hippo.legs import LegsOperator, build_legs

__all__ = [
    "CoeffTrajectory",
    "InitialState",
    "LegsApproximator",
    "LegsOperator",
    "build_legs",
    "legs_online_approx",
    "project_coefficients",
    "reconstruct",
    "reconstruct_curve",
]
