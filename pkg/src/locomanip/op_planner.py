"""Object path planning: RRT* over object pose plus a robot-pose candidate.

The search space couples the object's planar pose with a discrete index
into a list of robot stand-pose candidates (relative to the object), so
edges are only accepted where both the object and at least one candidate
robot placement stay collision-free.  Nonholonomic objects steer along
Reeds-Shepp curves; everything else uses straight position blending with
shorter-arc yaw.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .collision import Obb2, ObstacleSet
from .se2 import (
    DiscretePath,
    Pose2,
    compose,
    discretize,
    interpolate,
    planar_distance,
    reeds_shepp,
    step_along,
    wrap_angle,
)


@dataclass(frozen=True)
class CompoundState:
    """Object pose plus the index of the robot stand-pose candidate."""

    obj: Pose2
    robot_candidate: int


@dataclass(frozen=True)
class RobotCandidates:
    """Robot box poses relative to the object frame."""

    poses: tuple[Pose2, ...]

    def __post_init__(self):
        if not self.poses:
            raise ValueError("need at least one robot candidate")

    def __len__(self) -> int:
        return len(self.poses)


@dataclass(frozen=True)
class OpConfig:
    max_iterations: int = 5000
    goal_bias: float = 0.1
    steer_step: float = 0.5
    rewire_radius_constant: float = 5.0
    turning_radius: float = 1.0
    rng_seed: int = 0
    yaw_weight: float = 0.5            # m per rad, holonomic metric
    candidate_switch_penalty: float = 0.2
    goal_pos_tol: float = 0.05
    goal_yaw_tol: float = math.radians(5.0)
    edge_resolution: float = 0.05
    path_resolution: float = 0.05
    sample_margin: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.goal_bias < 1.0):
            raise ValueError("goal_bias must be in [0, 1)")
        for name in ("steer_step", "rewire_radius_constant", "turning_radius",
                     "edge_resolution", "path_resolution", "sample_margin"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class OpProblem:
    """Geometry inputs for one object-path query."""

    start: Pose2
    goal: Pose2
    obstacles: tuple[Obb2, ...]
    obj_box: Obb2
    robot_box: Obb2
    candidates: RobotCandidates
    nonholonomic: bool = False


@dataclass
class OpResult:
    """Best path found plus planning statistics; path is None on failure."""

    path: DiscretePath | None
    success: bool
    reason: str
    iterations: int
    nodes: int
    elapsed: float
    best_cost: float
    cost_history: list[tuple[int, float]] = field(default_factory=list)
    first_solution_time: float | None = None


class _Scratch:
    """Collision scratch shared by validity checks of one query."""

    def __init__(self, problem: OpProblem):
        self.problem = problem
        self.oset = ObstacleSet(list(problem.obstacles))
        self.cand = np.array([[p.x, p.y, p.yaw] for p in problem.candidates.poses])

    def states_valid(self, poses: np.ndarray) -> np.ndarray:
        """(M,) True where the object and some robot candidate are free."""
        m = poses.shape[0]
        if len(self.oset) == 0:
            return np.ones(m, dtype=bool)
        ok = self.oset.boxes_free(poses, self.problem.obj_box)
        need = np.nonzero(ok)[0]
        if len(need) == 0:
            return ok
        sub = poses[need]
        any_cand = np.zeros(len(need), dtype=bool)
        c = np.cos(sub[:, 2])
        s = np.sin(sub[:, 2])
        for k in range(self.cand.shape[0]):
            cx, cy, cyaw = self.cand[k]
            robot = np.empty_like(sub)
            robot[:, 0] = sub[:, 0] + c * cx - s * cy
            robot[:, 1] = sub[:, 1] + s * cx + c * cy
            robot[:, 2] = sub[:, 2] + cyaw
            todo = ~any_cand
            if not np.any(todo):
                break
            any_cand[todo] |= self.oset.boxes_free(robot[todo], self.problem.robot_box)
        ok[need] &= any_cand
        return ok


def _steer_poses(a: Pose2, b: Pose2, problem: OpProblem, cfg: OpConfig,
                 spacing: float) -> list[Pose2]:
    """Poses along the steering curve from a to b at <= spacing, inclusive."""
    if problem.nonholonomic:
        segs, length = reeds_shepp(a, b, cfg.turning_radius)
        poses = [a]
        pose = a
        for seg in segs:
            slen = abs(seg.signed_length)
            n = max(1, math.ceil(slen / spacing - 1e-12))
            for k in range(1, n + 1):
                poses.append(step_along(pose, seg, slen * k / n))
            pose = poses[-1]
        return poses
    dist = _holo_metric(a, b, cfg)
    n = max(1, math.ceil(dist / spacing - 1e-12))
    return [interpolate(a, b, k / n) for k in range(n + 1)]


def _holo_metric(a: Pose2, b: Pose2, cfg: OpConfig) -> float:
    return planar_distance(a, b) + cfg.yaw_weight * abs(wrap_angle(b.yaw - a.yaw))


def _pose_metric(a: Pose2, b: Pose2, problem: OpProblem, cfg: OpConfig) -> float:
    if problem.nonholonomic:
        return reeds_shepp(a, b, cfg.turning_radius)[1]
    return _holo_metric(a, b, cfg)


def edge_valid(a: CompoundState, b: CompoundState, problem: OpProblem,
               resolution: float, cfg: OpConfig | None = None,
               _scratch: _Scratch | None = None) -> bool:
    """Densely sample the steering curve; every sample must be valid.

    Validity at a sample means the object box is collision-free and at
    least one robot candidate placement is.  The candidate index itself
    only changes at edge endpoints, so it does not enter the per-sample
    check.
    """
    cfg = cfg or OpConfig()
    scratch = _scratch or _Scratch(problem)
    poses = _steer_poses(a.obj, b.obj, problem, cfg, resolution)
    arr = np.array([[p.x, p.y, p.yaw] for p in poses])
    return bool(np.all(scratch.states_valid(arr)))


def _in_goal(pose: Pose2, goal: Pose2, cfg: OpConfig) -> bool:
    return (planar_distance(pose, goal) <= cfg.goal_pos_tol
            and abs(wrap_angle(pose.yaw - goal.yaw)) <= cfg.goal_yaw_tol)


def plan_object_path(problem: OpProblem, cfg: OpConfig,
                     budget: float = math.inf) -> OpResult:
    """Anytime RRT*: returns the best path found within budget/iterations."""
    t0 = time.perf_counter()
    scratch = _Scratch(problem)
    rng = np.random.default_rng(cfg.rng_seed)

    for name, pose in (("start", problem.start), ("goal", problem.goal)):
        if not scratch.states_valid(pose.as_array()[None, :])[0]:
            return OpResult(None, False, f"{name} state violates collision "
                            "precondition", 0, 0, time.perf_counter() - t0, math.inf)

    if (planar_distance(problem.start, problem.goal) < 1e-12
            and abs(wrap_angle(problem.goal.yaw - problem.start.yaw)) < 1e-12):
        path = DiscretePath((problem.start,), np.zeros(1))
        return OpResult(path, True, "start equals goal", 0, 1,
                        time.perf_counter() - t0, 0.0, [(0, 0.0)], 0.0)

    # sampling window: bounding box of the task geometry, inflated
    xs = [problem.start.x, problem.goal.x]
    ys = [problem.start.y, problem.goal.y]
    for ob in problem.obstacles:
        xs += [ob.center.x - ob.radius(), ob.center.x + ob.radius()]
        ys += [ob.center.y - ob.radius(), ob.center.y + ob.radius()]
    lo = np.array([min(xs) - cfg.sample_margin, min(ys) - cfg.sample_margin])
    hi = np.array([max(xs) + cfg.sample_margin, max(ys) + cfg.sample_margin])

    n_cand = len(problem.candidates)
    poses: list[Pose2] = [problem.start]
    cands = [0]
    parent = [-1]
    gcost = [0.0]
    children: list[list[int]] = [[]]
    arr = np.zeros((max(cfg.max_iterations + 2, 16), 3))
    arr[0] = problem.start.as_array()

    goal_node = -1  # exact-goal node, created on first connection
    history: list[tuple[int, float]] = []
    first_t = None

    def metric(i: int, pose: Pose2, cand: int) -> float:
        base = _pose_metric(poses[i], pose, problem, cfg)
        if cands[i] != cand:
            base += cfg.candidate_switch_penalty
        return base

    def near_lower_bounds(pose: Pose2, n: int) -> np.ndarray:
        d = np.hypot(arr[:n, 0] - pose.x, arr[:n, 1] - pose.y)
        if not problem.nonholonomic:
            d = d + cfg.yaw_weight * np.abs(
                np.arctan2(np.sin(arr[:n, 2] - pose.yaw),
                           np.cos(arr[:n, 2] - pose.yaw)))
        return d

    def nearest(pose: Pose2, cand: int) -> int:
        lb = near_lower_bounds(pose, len(poses))
        order = np.argsort(lb, kind="stable")
        best_i, best_d = -1, math.inf
        for i in order:
            if lb[i] >= best_d:
                break
            d = metric(int(i), pose, cand)
            if d < best_d:
                best_d, best_i = d, int(i)
        return best_i

    def edge_ok(i: int, pose: Pose2) -> bool:
        pts = _steer_poses(poses[i], pose, problem, cfg, cfg.edge_resolution)
        a = np.array([[p.x, p.y, p.yaw] for p in pts])
        return bool(np.all(scratch.states_valid(a)))

    def add_node(pose: Pose2, cand: int, par: int, g: float) -> int:
        idx = len(poses)
        poses.append(pose)
        cands.append(cand)
        parent.append(par)
        gcost.append(g)
        children.append([])
        children[par].append(idx)
        if idx >= arr.shape[0]:
            raise RuntimeError("node array overflow")
        arr[idx] = pose.as_array()
        return idx

    def propagate(i: int) -> None:
        stack = [i]
        while stack:
            j = stack.pop()
            for ch in children[j]:
                gcost[ch] = gcost[j] + metric(j, poses[ch], cands[ch])
                stack.append(ch)

    it = 0
    for it in range(1, cfg.max_iterations + 1):
        if time.perf_counter() - t0 > budget:
            break
        if rng.uniform() < cfg.goal_bias:
            sample = problem.goal
            cand = int(rng.integers(0, n_cand))
        else:
            x, y = rng.uniform(lo, hi)
            sample = Pose2(float(x), float(y), float(rng.uniform(-math.pi, math.pi)))
            cand = int(rng.integers(0, n_cand))

        ni = nearest(sample, cand)
        d = _pose_metric(poses[ni], sample, problem, cfg)
        if d < 1e-12:
            continue
        if d <= cfg.steer_step:
            new_pose = sample
        else:
            pts = _steer_poses(poses[ni], sample, problem, cfg, cfg.steer_step)
            new_pose = pts[1] if len(pts) > 1 else pts[0]
        if not scratch.states_valid(new_pose.as_array()[None, :])[0]:
            continue
        if not edge_ok(ni, new_pose):
            continue

        n = len(poses)
        radius = min(cfg.rewire_radius_constant * (math.log(n + 1) / (n + 1)) ** (1 / 3),
                     2.0 * cfg.steer_step)
        lb = near_lower_bounds(new_pose, n)
        near = [int(i) for i in np.nonzero(lb <= radius)[0]]

        best_par, best_g = ni, gcost[ni] + metric(ni, new_pose, cand)
        for i in near:
            if i == ni:
                continue
            g = gcost[i] + metric(i, new_pose, cand)
            if g < best_g - 1e-12 and edge_ok(i, new_pose):
                best_par, best_g = i, g
        new_i = add_node(new_pose, cand, best_par, best_g)

        for i in near:
            if i == new_i or i == best_par:
                continue
            g = best_g + metric(new_i, poses[i], cands[i])
            if g < gcost[i] - 1e-12 and edge_ok(new_i, poses[i]):
                children[parent[i]].remove(i)
                parent[i] = new_i
                children[new_i].append(i)
                gcost[i] = g
                propagate(i)

        # exact-goal connection
        dg = _pose_metric(new_pose, problem.goal, problem, cfg)
        if dg <= max(cfg.steer_step, cfg.goal_pos_tol) and edge_ok(new_i, problem.goal):
            g = best_g + dg
            if goal_node < 0:
                goal_node = add_node(problem.goal, cand, new_i, g)
            elif g < gcost[goal_node] - 1e-12:
                children[parent[goal_node]].remove(goal_node)
                parent[goal_node] = new_i
                children[new_i].append(goal_node)
                gcost[goal_node] = g

        if goal_node >= 0:
            cur = gcost[goal_node]
            if not history or cur < history[-1][1] - 1e-12:
                history.append((it, cur))
                if first_t is None:
                    first_t = time.perf_counter() - t0

    elapsed = time.perf_counter() - t0
    if goal_node < 0:
        return OpResult(None, False, "no path within budget", it, len(poses),
                        elapsed, math.inf, history)

    chain = []
    i = goal_node
    while i >= 0:
        chain.append(i)
        i = parent[i]
    chain.reverse()

    if problem.nonholonomic:
        segments = []
        for a, b in zip(chain, chain[1:]):
            segs, _ = reeds_shepp(poses[a], poses[b], cfg.turning_radius)
            segments.extend(segs)
        path = discretize(segments, poses[chain[0]], cfg.path_resolution)
    else:
        pts: list[Pose2] = [poses[chain[0]]]
        for a, b in zip(chain, chain[1:]):
            seg = _steer_poses(poses[a], poses[b], problem, cfg, cfg.path_resolution)
            pts.extend(seg[1:])
        path = DiscretePath.from_poses(pts)

    return OpResult(path, True, "solved", it, len(poses), elapsed,
                    gcost[goal_node], history, first_t)


def holonomic_path(waypoints: list[Pose2], resolution: float) -> DiscretePath:
    """Discretized straight+shorter-arc path through explicit waypoints."""
    pts: list[Pose2] = [waypoints[0]]
    for a, b in zip(waypoints, waypoints[1:]):
        dist = max(planar_distance(a, b),
                   0.5 * abs(wrap_angle(b.yaw - a.yaw)))
        n = max(1, math.ceil(dist / resolution - 1e-12))
        pts.extend(interpolate(a, b, k / n) for k in range(1, n + 1))
    return DiscretePath.from_poses(pts)


def arc_path(hinge: Pose2, radius: float, yaw0: float, yaw1: float,
             resolution: float) -> DiscretePath:
    """Path of a body swinging about a hinge (door panels).

    The body center rides a circle of `radius` around the hinge while
    its yaw follows the swing angle; used for articulated objects whose
    path is fixed by the joint rather than planned.
    """
    sweep = yaw1 - yaw0
    arc_len = abs(sweep) * radius
    n = max(1, math.ceil(arc_len / resolution - 1e-12))
    pts = []
    for k in range(n + 1):
        a = yaw0 + sweep * k / n
        pts.append(Pose2(hinge.x + radius * math.cos(hinge.yaw + a),
                         hinge.y + radius * math.sin(hinge.yaw + a),
                         hinge.yaw + a))
    return DiscretePath.from_poses(pts)


def save_path_csv(path: DiscretePath, out) -> None:
    """Ordered (s, x, y, yaw) rows of a discretized object path."""
    with open(out, "w") as f:
        f.write("s,x,y,yaw\n")
        for pose, s in zip(path.poses, path.cumulative_arclength):
            f.write(f"{s:.9g},{pose.x:.9g},{pose.y:.9g},{pose.yaw:.9g}\n")
