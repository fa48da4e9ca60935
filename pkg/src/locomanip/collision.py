"""Oriented-bounding-box obstacle checks on the ground plane.

Both planners approximate the robot and the manipulated object by a
single box each; obstacles are boxes too.  Touching boxes count as
colliding, which keeps the checks conservative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .se2 import Pose2, compose, mid_pose


@dataclass(frozen=True)
class Obb2:
    """Oriented box: center pose plus half extents along its local axes."""

    center: Pose2
    half_extents: tuple[float, float]

    def __post_init__(self):
        hx, hy = self.half_extents
        if hx <= 0.0 or hy <= 0.0:
            raise ValueError("half extents must be positive")

    def corners(self) -> np.ndarray:
        """World corners, counter-clockwise, shape (4, 2)."""
        hx, hy = self.half_extents
        local = np.array([[hx, hy], [-hx, hy], [-hx, -hy], [hx, -hy]])
        c, s = math.cos(self.center.yaw), math.sin(self.center.yaw)
        rot = np.array([[c, -s], [s, c]])
        return local @ rot.T + np.array([self.center.x, self.center.y])

    def radius(self) -> float:
        return math.hypot(*self.half_extents)

    def placed_at(self, anchor: Pose2) -> "Obb2":
        """The box with its center pose re-expressed relative to `anchor`."""
        return Obb2(compose(anchor, self.center), self.half_extents)


def _axes(box: Obb2) -> np.ndarray:
    c, s = math.cos(box.center.yaw), math.sin(box.center.yaw)
    return np.array([[c, s], [-s, c]])


def obb_overlap(a: Obb2, b: Obb2) -> bool:
    """Separating-axis test over the 4 box axes; touching counts as overlap."""
    # quick reject on bounding circles
    dx = b.center.x - a.center.x
    dy = b.center.y - a.center.y
    if math.hypot(dx, dy) > a.radius() + b.radius():
        return False
    ca, cb = a.corners(), b.corners()
    for axis in np.vstack([_axes(a), _axes(b)]):
        pa = ca @ axis
        pb = cb @ axis
        if pa.min() > pb.max() or pb.min() > pa.max():
            return False
    return True


def state_collision_free(feet_mid: Pose2, robot_box: Obb2, obj_pose: Pose2,
                         obj_box: Obb2, obstacles: list[Obb2]) -> bool:
    """True iff the placed robot and object boxes clear every obstacle.

    robot_box / obj_box are templates whose center pose is relative to
    the anchor (feet midpoint and object pose respectively).  The robot
    standing next to the object is intentional, so robot-object overlap
    is not checked.
    """
    if not obstacles:
        return True
    robot = robot_box.placed_at(feet_mid)
    obj = obj_box.placed_at(obj_pose)
    for obs in obstacles:
        if obb_overlap(robot, obs) or obb_overlap(obj, obs):
            return False
    return True


# ---------------------------------------------------------------------------
# Batched variants used by the planners
# ---------------------------------------------------------------------------

class ObstacleSet:
    """Pre-computed corner/axis arrays for a fixed list of obstacles."""

    def __init__(self, obstacles: list[Obb2]):
        self.obstacles = list(obstacles)
        n = len(self.obstacles)
        self.corners = np.zeros((n, 4, 2))
        self.axes = np.zeros((n, 2, 2))
        self.centers = np.zeros((n, 2))
        self.radii = np.zeros(n)
        for i, ob in enumerate(self.obstacles):
            self.corners[i] = ob.corners()
            self.axes[i] = _axes(ob)
            self.centers[i] = (ob.center.x, ob.center.y)
            self.radii[i] = ob.radius()

    def __len__(self) -> int:
        return len(self.obstacles)

    def boxes_free(self, poses: np.ndarray, template: Obb2) -> np.ndarray:
        """For (M, 3) poses of a box template: (M,) True where collision-free."""
        m = poses.shape[0]
        if len(self.obstacles) == 0 or m == 0:
            return np.ones(m, dtype=bool)
        hx, hy = template.half_extents
        cy = template.center
        yaw = poses[:, 2] + cy.yaw
        c, s = np.cos(poses[:, 2]), np.sin(poses[:, 2])
        cxs = poses[:, 0] + c * cy.x - s * cy.y
        cys = poses[:, 1] + s * cy.x + c * cy.y
        cb, sb = np.cos(yaw), np.sin(yaw)
        # corners: (M, 4, 2)
        local = np.array([[hx, hy], [-hx, hy], [-hx, -hy], [hx, -hy]])
        cor = np.empty((m, 4, 2))
        cor[:, :, 0] = cxs[:, None] + local[:, 0] * cb[:, None] - local[:, 1] * sb[:, None]
        cor[:, :, 1] = cys[:, None] + local[:, 0] * sb[:, None] + local[:, 1] * cb[:, None]
        box_axes = np.empty((m, 2, 2))
        box_axes[:, 0, 0] = cb
        box_axes[:, 0, 1] = sb
        box_axes[:, 1, 0] = -sb
        box_axes[:, 1, 1] = cb

        free = np.ones(m, dtype=bool)
        rad = math.hypot(hx, hy)
        for k in range(len(self.obstacles)):
            dist = np.hypot(cxs - self.centers[k, 0], cys - self.centers[k, 1])
            maybe = dist <= rad + self.radii[k]
            if not np.any(maybe):
                continue
            idx = np.nonzero(maybe)[0]
            # project both corner sets on the 4 candidate axes
            axes = np.concatenate([box_axes[idx], np.broadcast_to(
                self.axes[k], (len(idx), 2, 2))], axis=1)  # (n, 4, 2)
            pa = np.einsum("ncd,nad->nca", cor[idx], axes)
            pb = np.einsum("cd,nad->nca", self.corners[k], axes)
            sep = (pa.min(axis=1) > pb.max(axis=1)) | (pb.min(axis=1) > pa.max(axis=1))
            overlap = ~np.any(sep, axis=1)
            free[idx] &= ~overlap
        return free


def feet_mid_poses(stance: np.ndarray, swing: np.ndarray) -> np.ndarray:
    """Vectorized mid-pose of stance/swing arrays of shape (M, 3)."""
    from .se2 import wrap_angles

    dyaw = wrap_angles(swing[:, 2] - stance[:, 2])
    out = np.empty_like(stance)
    out[:, 0] = 0.5 * (stance[:, 0] + swing[:, 0])
    out[:, 1] = 0.5 * (stance[:, 1] + swing[:, 1])
    out[:, 2] = wrap_angles(stance[:, 2] + 0.5 * dyaw)
    return out


__all__ = ["Obb2", "obb_overlap", "state_collision_free", "ObstacleSet",
           "feet_mid_poses", "mid_pose"]
