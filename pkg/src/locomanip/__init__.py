"""Loco-manipulation planning toolkit.

Plans an object's path through the workspace, a footstep-and-regrasp
sequence that realizes it, and a balance trajectory sketch (ZMP preview
control) for the resulting gait.
"""

from .se2 import (
    DiscretePath,
    PathSegment,
    Pose2,
    apply_action,
    compose,
    discretize,
    interpolate,
    inverse,
    mid_pose,
    path_distance,
    reeds_shepp,
    reeds_shepp_length,
    wrap_angle,
)

__all__ = [
    "Pose2",
    "PathSegment",
    "DiscretePath",
    "compose",
    "inverse",
    "apply_action",
    "mid_pose",
    "interpolate",
    "reeds_shepp",
    "reeds_shepp_length",
    "discretize",
    "path_distance",
    "wrap_angle",
]
