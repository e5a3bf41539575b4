"""Floating-point side: Green function, rays, fixed points, geometry, rendering."""
from .fixed_points import FixedPointInfo, fixed_points
from .green import bottcher_arg, green, green_parameter
from .rays import (
    NewtonDiverged,
    RayPath,
    center_for_angle,
    find_center,
    trace_dynamical_ray,
    trace_parameter_ray,
)

__all__ = [
    "FixedPointInfo",
    "NewtonDiverged",
    "RayPath",
    "bottcher_arg",
    "center_for_angle",
    "find_center",
    "fixed_points",
    "green",
    "green_parameter",
    "trace_dynamical_ray",
    "trace_parameter_ray",
]
