"""Footstep and regrasp planning.

Search nodes couple both feet, the object's index along its path, and
the grasping hand; successors interleave stepping, object progression
along the path, and hand switches.  Transition feasibility is decided
by reachability-map lookups (switchability at handoffs, movability
while walking) plus box collision checks.  The search itself is an
anytime dynamic A*: weighted A* passes with a shrinking inflation
factor that reuse earlier search effort, plus incremental repair when
obstacles change.
"""

from __future__ import annotations

import enum
import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .collision import Obb2, ObstacleSet, feet_mid_poses
from .reachability import (
    HandSide,
    ReachabilityMap,
    RollingMapFamily,
    contains,
    contains_batch,
    select_map,
)
from .se2 import (
    DiscretePath,
    Pose2,
    compose_offsets,
    mid_pose,
    path_distance,
    planar_distance,
    wrap_angle,
)

QUANT_LIN = 1e-3                  # planner lattice: 1 mm
QUANT_ANG = math.radians(0.1)     # and 0.1 degree
_INF = math.inf


class FootSide(enum.Enum):
    LEFT = "left"
    RIGHT = "right"

    def other(self) -> "FootSide":
        return FootSide.RIGHT if self is FootSide.LEFT else FootSide.LEFT


class HandMode(enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    BOTH = "both"


_HAND_SIDE = {HandMode.LEFT: HandSide.LEFT, HandMode.RIGHT: HandSide.RIGHT}


def _quant_angle(yaw: float) -> int:
    q = round(yaw / QUANT_ANG)
    full = round(2.0 * math.pi / QUANT_ANG)
    if q <= -full // 2:
        q += full
    return q


def _quant_angles(yaws: np.ndarray) -> np.ndarray:
    full = round(2.0 * math.pi / QUANT_ANG)
    q = np.rint(np.asarray(yaws) / QUANT_ANG).astype(np.int64)
    q[q <= -(full // 2)] += full
    return q


def quantize_pose(p: Pose2) -> tuple[int, int, int]:
    return (round(p.x / QUANT_LIN), round(p.y / QUANT_LIN), _quant_angle(p.yaw))


@dataclass(frozen=True)
class PlanState:
    """One search node: both feet, object path index, grasping hand.

    swing_side always opposes stance_side; regrasp_index records the
    object index at the last hand switch and only matters for rolling
    objects (it selects which reachability map applies).
    """

    stance_pose: Pose2
    stance_side: FootSide
    swing_pose: Pose2
    swing_side: FootSide
    obj_index: int
    hand: HandMode
    regrasp_index: int = 0

    def __post_init__(self):
        if self.swing_side is not self.stance_side.other():
            raise ValueError("swing side must oppose stance side")
        if self.regrasp_index > self.obj_index:
            raise ValueError("regrasp index cannot exceed the object index")

    def key(self) -> tuple:
        return (*quantize_pose(self.stance_pose), self.stance_side.value,
                *quantize_pose(self.swing_pose), self.obj_index,
                self.hand.value, self.regrasp_index)

    def __hash__(self):
        return hash(self.key())

    def __eq__(self, other):
        return isinstance(other, PlanState) and self.key() == other.key()

    def feet_mid(self) -> Pose2:
        return mid_pose(self.stance_pose, self.swing_pose)


# ---------------------------------------------------------------------------
# Footstep actions
# ---------------------------------------------------------------------------

def _halton(index: int, base: int) -> float:
    f, r = 1.0, 0.0
    while index > 0:
        f /= base
        r += f * (index % base)
        index //= base
    return r


def _point_in_polygon(x: float, y: float, poly) -> bool:
    inside = False
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            t = (y - y1) / (y2 - y1)
            if x < x1 + t * (x2 - x1):
                inside = not inside
    return inside


def _mirror_action(a: Pose2) -> Pose2:
    return Pose2(a.x, -a.y, -a.yaw)


@dataclass(frozen=True)
class FootstepActionSet:
    """Swing-foot landing offsets relative to the stance foot, per side.

    Includes the no-stepping action (identity): applying it leaves the
    stepping foot at its previous rest pose.  max_stride caches the
    largest planar action norm, which also bounds how far the feet
    midpoint travels in one paid step.
    """

    left: tuple[Pose2, ...]
    right: tuple[Pose2, ...]
    region: tuple[tuple[float, float], ...]
    max_stride: float

    def __post_init__(self):
        for side_actions in (self.left, self.right):
            if not any(_is_identity(a) for a in side_actions):
                raise ValueError("action set must contain the no-stepping action")

    def actions(self, side: FootSide) -> tuple[Pose2, ...]:
        return self.left if side is FootSide.LEFT else self.right

    @staticmethod
    def from_actions(side: FootSide, actions: list[Pose2],
                     region=()) -> "FootstepActionSet":
        acts = list(actions)
        if not any(_is_identity(a) for a in acts):
            acts.append(Pose2(0.0, 0.0, 0.0))
        mirrored = [_mirror_action(a) for a in acts]
        stride = max((math.hypot(a.x, a.y) for a in acts), default=0.0)
        if side is FootSide.RIGHT:
            return FootstepActionSet(tuple(mirrored), tuple(acts),
                                     tuple(region), stride)
        return FootstepActionSet(tuple(acts), tuple(mirrored),
                                 tuple(region), stride)


def _is_identity(a: Pose2) -> bool:
    return abs(a.x) < 1e-12 and abs(a.y) < 1e-12 and abs(a.yaw) < 1e-12


def generate_actions(n: int, region, yaw_range: tuple[float, float],
                     side: FootSide = FootSide.RIGHT) -> FootstepActionSet:
    """Quasirandom footstep actions from the Halton sequence.

    Bases 2, 3, 5 drive x, y, yaw; x/y are mapped affinely onto the
    polygon's bounding box and rejected until n points fall inside the
    polygon.  The identity (no-stepping) action is appended, and the
    mirrored set serves the other foot.
    """
    if n < 1:
        raise ValueError("need at least one action")
    poly = [(float(x), float(y)) for x, y in region]
    if len(poly) < 3:
        raise ValueError("region must be a polygon")
    xs = [p[0] for p in poly]
    ys = [p[1] for p in poly]
    lo = (min(xs), min(ys))
    hi = (max(xs), max(ys))
    accepted: list[Pose2] = []
    draws = 0
    index = 1
    while len(accepted) < n:
        draws += 1
        if draws > 100 * n:
            raise ValueError(f"action region too small: accepted "
                             f"{len(accepted)}/{n} after {draws} draws")
        x = lo[0] + _halton(index, 2) * (hi[0] - lo[0])
        y = lo[1] + _halton(index, 3) * (hi[1] - lo[1])
        yaw = yaw_range[0] + _halton(index, 5) * (yaw_range[1] - yaw_range[0])
        index += 1
        if _point_in_polygon(x, y, poly):
            accepted.append(Pose2(x, y, yaw))
    return FootstepActionSet.from_actions(side, accepted, region=poly)


# ---------------------------------------------------------------------------
# Maps bundle and configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HandMaps:
    """Per-hand reachability: plain maps or rolling families."""

    left: ReachabilityMap | RollingMapFamily
    right: ReachabilityMap | RollingMapFamily

    @property
    def rolling(self) -> bool:
        return isinstance(self.left, RollingMapFamily)

    @property
    def max_roll_distance(self) -> float:
        if not self.rolling:
            return _INF
        return min(self.left.max_distance, self.right.max_distance)

    def map_for(self, side: HandSide, d: float = 0.0) -> ReachabilityMap:
        entry = self.left if side is HandSide.LEFT else self.right
        if isinstance(entry, RollingMapFamily):
            return select_map(entry, d)
        return entry


@dataclass(frozen=True)
class FrConfig:
    n_obj_max: int = 5
    c_step: float = 0.3
    c_regrasp: float = 0.5
    nominal_offset: float = 1.2
    w_nominal: float = 1.0
    epsilon_init: float = 8.0
    epsilon_decay: float = 0.5
    epsilon_final: float = 1.0
    time_budget: float = 10.0

    def __post_init__(self):
        if self.n_obj_max < 1:
            raise ValueError("n_obj_max must be >= 1")
        if self.c_step < 0 or self.c_regrasp < 0 or self.w_nominal < 0:
            raise ValueError("costs must be non-negative")
        if self.epsilon_init < 1.0 or not (0.0 < self.epsilon_decay < 1.0):
            raise ValueError("need epsilon_init >= 1 and decay in (0, 1)")
        if self.epsilon_final != 1.0:
            raise ValueError("the schedule must end at epsilon 1")


# inflation extremes reported for the bobbin run (initial/final solutions)
TABLE_II_BOBBIN_EPSILONS = {"epsilon_init": 82.0, "epsilon_decay": 3.6 / 82.0}


@dataclass(frozen=True)
class FrProblem:
    """Inputs for one footstep/regrasp query."""

    path: DiscretePath
    maps: HandMaps
    actions: FootstepActionSet
    obstacles: tuple[Obb2, ...]
    robot_box: Obb2
    obj_box: Obb2
    initial_left: Pose2
    initial_right: Pose2
    start_hand: HandMode = HandMode.LEFT


@dataclass(frozen=True)
class ObstacleDelta:
    add: tuple[Obb2, ...] = ()
    remove_indices: tuple[int, ...] = ()


# ---------------------------------------------------------------------------
# Scalar transition rules (also used by the independent validator)
# ---------------------------------------------------------------------------

def _rolled(path: DiscretePath, maps: HandMaps, rg: int, idx: int) -> float:
    if not maps.rolling:
        return 0.0
    return path_distance(path, rg, idx)


def _reach(maps: HandMaps, hand: HandMode, d: float, com: Pose2,
           obj: Pose2) -> bool:
    if hand is HandMode.BOTH:
        return (contains(maps.map_for(HandSide.LEFT, d), com, obj)
                and contains(maps.map_for(HandSide.RIGHT, d), com, obj))
    return contains(maps.map_for(_HAND_SIDE[hand], d), com, obj)


def f_switchable(s: PlanState, new_hand: HandMode, maps: HandMaps,
                 path: DiscretePath) -> bool:
    """Handoff feasibility with both feet planted and the CoM mid-feet.

    Keeping the same hand is always allowed.  A switch needs the object
    reachable by the old hand (still holding) and by the new hand (about
    to grasp, rolled distance zero) from the current feet midpoint.
    """
    if new_hand is s.hand:
        return True
    if HandMode.BOTH in (new_hand, s.hand):
        return False
    com = s.feet_mid()
    obj = path.poses[s.obj_index]
    d_old = _rolled(path, maps, s.regrasp_index, s.obj_index)
    return (_reach(maps, s.hand, d_old, com, obj)
            and _reach(maps, new_hand, 0.0, com, obj))


def f_movable(s: PlanState, s_next: PlanState, path: DiscretePath,
              maps: HandMaps) -> bool:
    """Object progression feasibility over one transition.

    Checks the mid-timing pose against the CoM placed on the new stance
    foot and the final pose against the new feet midpoint; the start
    pose was already covered by the previous switchability check.  For
    rolling objects the rolled distance since the governing regrasp must
    stay within the map family's coverage.
    """
    mid_idx = (s.obj_index + s_next.obj_index) // 2
    rg = s_next.regrasp_index
    if maps.rolling:
        if path_distance(path, rg, s_next.obj_index) > maps.max_roll_distance + 1e-9:
            return False
    d_mid = _rolled(path, maps, rg, mid_idx)
    d_new = _rolled(path, maps, rg, s_next.obj_index)
    hand = s_next.hand
    if not _reach(maps, hand, d_mid, s_next.stance_pose, path.poses[mid_idx]):
        return False
    com = mid_pose(s_next.stance_pose, s_next.swing_pose)
    return _reach(maps, hand, d_new, com, path.poses[s_next.obj_index])


def _stepped(prev: PlanState, nxt: PlanState) -> bool:
    """Whether the transition actually moved a foot (pays c_step)."""
    rest = prev.stance_pose  # the moving foot's pose before the transition
    land = nxt.swing_pose
    return (abs(land.x - rest.x) > QUANT_LIN or abs(land.y - rest.y) > QUANT_LIN
            or abs(wrap_angle(land.yaw - rest.yaw)) > QUANT_ANG)


def transition_cost(s: PlanState, s_next: PlanState, path: DiscretePath,
                    cfg: FrConfig) -> float:
    cost = path_distance(path, s.obj_index, s_next.obj_index)
    if _stepped(s, s_next):
        cost += cfg.c_step
    if s_next.hand is not s.hand:
        cost += cfg.c_regrasp
    return cost


def _path_tangents(path: DiscretePath) -> np.ndarray:
    pts = np.array([[p.x, p.y] for p in path.poses])
    n = len(pts)
    tang = np.zeros((n, 2))
    for i in range(n):
        a = pts[max(i - 1, 0)]
        b = pts[min(i + 1, n - 1)]
        v = b - a
        norm = math.hypot(*v)
        if norm < 1e-12:
            yaw = path.poses[i].yaw
            tang[i] = (math.cos(yaw), math.sin(yaw))
        else:
            tang[i] = v / norm
    return tang


def nominal_positions(path: DiscretePath, offset: float) -> np.ndarray:
    """Preferred feet-midpoint per path index: offset behind the object
    along the local path tangent."""
    pts = np.array([[p.x, p.y] for p in path.poses])
    return pts - offset * _path_tangents(path)


def heuristic(s: PlanState, path: DiscretePath, cfg: FrConfig,
              max_stride: float) -> float:
    """Remaining path distance, a stride-limited step count toward the
    goal-side nominal stand, and the nominal-pose attraction term.

    Goal states cost nothing.  The foot-travel term measures how far the
    feet midpoint is from the nominal-offset ring around the goal object
    (not from the single nominal point: plans may legitimately stop at
    any stand within reach, so the ring keeps the term admissible when
    the reachable radius does not exceed nominal_offset).  One paid step
    moves the feet midpoint by at most max_stride.  With w_nominal = 0
    the estimate is then admissible.
    """
    last = len(path) - 1
    if s.obj_index >= last:
        return 0.0
    mid = s.feet_mid()
    goal = path.poses[last]
    travel = max(0.0, math.hypot(mid.x - goal.x, mid.y - goal.y)
                 - cfg.nominal_offset)
    if max_stride > 1e-9:
        n_step = math.ceil(travel / max_stride - 1e-12)
    else:
        n_step = 0
    h = path_distance(path, s.obj_index, last) + n_step * cfg.c_step
    if cfg.w_nominal > 0.0:
        nom = nominal_positions(path, cfg.nominal_offset)
        h += cfg.w_nominal * math.hypot(mid.x - nom[s.obj_index, 0],
                                        mid.y - nom[s.obj_index, 1])
    return h


def validate_transition(prev: PlanState, nxt: PlanState, problem: FrProblem,
                        cfg: FrConfig) -> list[str]:
    """Re-check every successor rule for one transition; returns violations.

    Used as the independent soundness validator: label bookkeeping, the
    landing's membership in the action set (or the no-step rest pose),
    the object index window, both reachability predicates, and endpoint
    collision.
    """
    errors = []
    if nxt.stance_side is not prev.swing_side:
        errors.append("stance label must take the previous swing label")
    if nxt.swing_side is not prev.stance_side:
        errors.append("swing label must take the previous stance label")
    if quantize_pose(nxt.stance_pose) != quantize_pose(prev.swing_pose):
        errors.append("stance pose must carry over from the previous swing pose")
    if prev.hand is HandMode.BOTH and nxt.hand is not HandMode.BOTH:
        errors.append("both-hands mode cannot switch")

    landings = {quantize_pose(p) for p in (
        [prev.stance_pose] +  # no-stepping keeps the old rest pose
        [Pose2(*_apply(nxt.stance_pose, a)) for a in
         problem.actions.actions(nxt.swing_side) if not _is_identity(a)])}
    if quantize_pose(nxt.swing_pose) not in landings:
        errors.append("swing landing is not produced by any footstep action")

    dj = nxt.obj_index - prev.obj_index
    if dj < 0 or dj > cfg.n_obj_max:
        errors.append("object index increment outside [0, n_obj_max]")
    if nxt.obj_index >= len(problem.path):
        errors.append("object index beyond path end")

    expected_rg = prev.obj_index if nxt.hand is not prev.hand else prev.regrasp_index
    if problem.maps.rolling and nxt.regrasp_index != expected_rg:
        errors.append("regrasp index not updated at the hand switch")

    if not f_switchable(prev, nxt.hand, problem.maps, problem.path):
        errors.append("switchability predicate fails")
    elif not f_movable(prev, nxt, problem.path, problem.maps):
        errors.append("movability predicate fails")

    from .collision import state_collision_free

    if not state_collision_free(nxt.feet_mid(), problem.robot_box,
                                problem.path.poses[nxt.obj_index],
                                problem.obj_box, list(problem.obstacles)):
        errors.append("endpoint collision")
    return errors


def _apply(stance: Pose2, action: Pose2) -> tuple[float, float, float]:
    c, s = math.cos(stance.yaw), math.sin(stance.yaw)
    return (stance.x + c * action.x - s * action.y,
            stance.y + s * action.x + c * action.y,
            wrap_angle(stance.yaw + action.yaw))


# ---------------------------------------------------------------------------
# Solutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlanRecord:
    k: int
    stance_side: FootSide
    stance_pose: Pose2
    swing_pose: Pose2
    hand: HandMode
    obj_index: int
    cumulative_cost: float


@dataclass(frozen=True)
class Solution:
    epsilon: float
    cost: float
    records: tuple[PlanRecord, ...]
    footsteps: int
    expanded: int
    elapsed: float

    def states(self, problem: FrProblem) -> list[PlanState]:
        """Reconstruct full states (regrasp indices) from the records."""
        out = []
        rg = 0
        prev_hand = None
        for r in self.records:
            if prev_hand is not None and r.hand is not prev_hand:
                rg = out[-1].obj_index
            out.append(PlanState(r.stance_pose, r.stance_side, r.swing_pose,
                                 r.stance_side.other(), r.obj_index, r.hand,
                                 rg if problem.maps.rolling else 0))
            prev_hand = r.hand
        return out


# ---------------------------------------------------------------------------
# The planner
# ---------------------------------------------------------------------------

_SIDES = (FootSide.LEFT, FootSide.RIGHT)
_HANDS_SINGLE = (HandMode.LEFT, HandMode.RIGHT)
_HAND_CODE = {HandMode.LEFT: 0, HandMode.RIGHT: 1, HandMode.BOTH: 2}
_HAND_FROM_CODE = {v: k for k, v in _HAND_CODE.items()}
_SIDE_CODE = {FootSide.LEFT: 0, FootSide.RIGHT: 1}
_SIDE_FROM_CODE = {0: FootSide.LEFT, 1: FootSide.RIGHT}

_GOAL = -1  # sentinel row for the virtual goal


class FrPlanner:
    """Anytime dynamic search over the footstep/regrasp graph.

    solve() yields one Solution per converged inflation step; replan()
    repairs the stored search after an obstacle change and yields the
    repaired solutions.  Instances are single-query and stateful.
    """

    def __init__(self, problem: FrProblem, cfg: FrConfig):
        self.problem = problem
        self.cfg = cfg
        self.path = problem.path
        self.last = len(problem.path) - 1
        self.outcome = "unsolved"
        self.stats_rows: list[tuple] = []
        self.expanded_total = 0
        self._t0 = None

        self._cum = problem.path.cumulative_arclength
        self._ppose = np.array([[p.x, p.y, p.yaw] for p in problem.path.poses])
        self._nom = nominal_positions(problem.path, cfg.nominal_offset)
        self._obstacles = list(problem.obstacles)
        self._rebuild_obstacles()

        acts = {side: np.array([[a.x, a.y, a.yaw]
                                for a in problem.actions.actions(side)])
                for side in _SIDES}
        self._acts = acts
        self._act_ident = {side: np.array([_is_identity(a) for a in
                                           problem.actions.actions(side)])
                           for side in _SIDES}
        self.max_stride = problem.actions.max_stride

        # state arena
        self._keys: dict[tuple, int] = {}
        self._poses = np.zeros((256, 6))       # stance xyz, swing xyz
        self._idx = np.zeros(256, dtype=np.int32)
        self._rg = np.zeros(256, dtype=np.int32)
        self._side = np.zeros(256, dtype=np.int8)
        self._hand = np.zeros(256, dtype=np.int8)
        self._g = np.full(256, _INF)
        self._rhs = np.full(256, _INF)
        self._h = np.zeros(256)
        self._closed_at = np.full(256, -1, dtype=np.int64)
        self._n = 0

        self._preds: dict[int, list[int]] = {}
        self._succs: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._sources: set[int] = set()
        self._incons: set[int] = set()
        self._open: list = []
        self._seq = 0
        self._epoch = 0
        self._eps = cfg.epsilon_init
        self._goal_g = _INF
        self._goal_rhs = _INF
        self._goal_preds: set[int] = set()

    # -- arena ---------------------------------------------------------------

    def _grow(self, need: int) -> None:
        cap = self._poses.shape[0]
        if need <= cap:
            return
        new = max(need, 2 * cap)
        self._poses = np.resize(self._poses, (new, 6))
        for name in ("_idx", "_rg", "_side", "_hand", "_g", "_rhs", "_h",
                     "_closed_at"):
            arr = getattr(self, name)
            grown = np.resize(arr, new)
            grown[arr.shape[0]:] = (_INF if name in ("_g", "_rhs")
                                    else (-1 if name == "_closed_at" else 0))
            setattr(self, name, grown)

    def _register(self, stance, side_code, swing, idx, hand_code, rg) -> int:
        key = (round(stance[0] / QUANT_LIN), round(stance[1] / QUANT_LIN),
               _quant_angle(stance[2]), side_code,
               round(swing[0] / QUANT_LIN), round(swing[1] / QUANT_LIN),
               _quant_angle(swing[2]), idx, hand_code, rg)
        return self._register_keyed(key, stance, swing, idx, hand_code, rg,
                                    side_code)

    def _register_keyed(self, key, stance, swing, idx, hand_code, rg,
                        side_code) -> int:
        row = self._keys.get(key)
        if row is not None:
            return row
        row = self._n
        self._grow(row + 1)
        self._keys[key] = row
        self._poses[row, 0:3] = stance
        self._poses[row, 3:6] = swing
        self._idx[row] = idx
        self._rg[row] = rg
        self._side[row] = side_code
        self._hand[row] = hand_code
        self._g[row] = _INF
        self._rhs[row] = _INF
        self._closed_at[row] = -1
        self._h[row] = self._heuristic_row(stance, swing, idx)
        self._n += 1
        return row

    def state_of(self, row: int) -> PlanState:
        side = _SIDE_FROM_CODE[int(self._side[row])]
        return PlanState(
            Pose2(*self._poses[row, 0:3]), side,
            Pose2(*self._poses[row, 3:6]), side.other(),
            int(self._idx[row]), _HAND_FROM_CODE[int(self._hand[row])],
            int(self._rg[row]))

    def row_of(self, s: PlanState) -> int:
        sp, wp = s.stance_pose, s.swing_pose
        return self._register(
            (sp.x, sp.y, sp.yaw), _SIDE_CODE[s.stance_side],
            (wp.x, wp.y, wp.yaw), s.obj_index, _HAND_CODE[s.hand],
            s.regrasp_index if self.problem.maps.rolling else 0)

    def _heuristic_row(self, stance, swing, idx) -> float:
        if idx >= self.last:
            return 0.0
        cfg = self.cfg
        mx = 0.5 * (stance[0] + swing[0])
        my = 0.5 * (stance[1] + swing[1])
        travel = max(0.0, math.hypot(mx - self._ppose[self.last, 0],
                                     my - self._ppose[self.last, 1])
                     - cfg.nominal_offset)
        if self.max_stride > 1e-9:
            n_step = math.ceil(travel / self.max_stride - 1e-12)
        else:
            n_step = 0
        h = (self._cum[self.last] - self._cum[idx]) + n_step * cfg.c_step
        if cfg.w_nominal > 0.0:
            h += cfg.w_nominal * math.hypot(mx - self._nom[idx, 0],
                                            my - self._nom[idx, 1])
        return h

    # -- obstacle-dependent caches --------------------------------------------

    def _rebuild_obstacles(self) -> None:
        self._oset = ObstacleSet(self._obstacles)
        self._obj_free = self._oset.boxes_free(self._ppose, self.problem.obj_box)

    # -- costs ----------------------------------------------------------------

    def _cost_rows(self, pred_rows: np.ndarray, succ_row: int) -> np.ndarray:
        cfg = self.cfg
        d = np.abs(self._cum[self._idx[succ_row]] - self._cum[self._idx[pred_rows]])
        land = self._poses[succ_row, 3:6]
        rest = self._poses[pred_rows, 0:3]
        dyaw = np.abs(np.arctan2(np.sin(land[2] - rest[:, 2]),
                                 np.cos(land[2] - rest[:, 2])))
        stepped = ((np.abs(land[0] - rest[:, 0]) > QUANT_LIN)
                   | (np.abs(land[1] - rest[:, 1]) > QUANT_LIN)
                   | (dyaw > QUANT_ANG))
        regrasp = self._hand[pred_rows] != self._hand[succ_row]
        return d + cfg.c_step * stepped + cfg.c_regrasp * regrasp

    def _costs_from(self, pred_row: int, succ_rows: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        if len(succ_rows) == 0:
            return np.zeros(0)
        d = np.abs(self._cum[self._idx[succ_rows]] - self._cum[self._idx[pred_row]])
        rest = self._poses[pred_row, 0:3]
        land = self._poses[succ_rows, 3:6]
        dyaw = np.abs(np.arctan2(np.sin(land[:, 2] - rest[2]),
                                 np.cos(land[:, 2] - rest[2])))
        stepped = ((np.abs(land[:, 0] - rest[0]) > QUANT_LIN)
                   | (np.abs(land[:, 1] - rest[1]) > QUANT_LIN)
                   | (dyaw > QUANT_ANG))
        regrasp = self._hand[succ_rows] != self._hand[pred_row]
        return d + cfg.c_step * stepped + cfg.c_regrasp * regrasp

    # -- reachability helpers ---------------------------------------------------

    def _map(self, hand_code: int, d: float):
        if hand_code == 0:
            return self.problem.maps.map_for(HandSide.LEFT, d)
        if hand_code == 1:
            return self.problem.maps.map_for(HandSide.RIGHT, d)
        return None  # both hands: caller intersects

    def _reach_batch(self, hand_code: int, d: float, com: np.ndarray,
                     obj: np.ndarray) -> np.ndarray:
        if hand_code == 2:
            left = contains_batch(self.problem.maps.map_for(HandSide.LEFT, d),
                                  com, obj)
            right = contains_batch(self.problem.maps.map_for(HandSide.RIGHT, d),
                                   com, obj)
            return left & right
        return contains_batch(self._map(hand_code, d), com, obj)

    def _reach_side_at(self, side: HandSide, ds: np.ndarray, com: np.ndarray,
                       obj: np.ndarray) -> np.ndarray:
        """Membership where each row carries its own rolled distance."""
        entry = (self.problem.maps.left if side is HandSide.LEFT
                 else self.problem.maps.right)
        if not isinstance(entry, RollingMapFamily):
            return contains_batch(entry, com, obj)
        dist = np.asarray(entry.distances)
        gidx = np.abs(ds[:, None] - dist[None, :]).argmin(axis=1)
        out = np.zeros(com.shape[0], dtype=bool)
        for gi in np.unique(gidx):
            sel = gidx == gi
            out[sel] = contains_batch(entry.maps[int(gi)], com[sel], obj[sel])
        return out

    def _reach_at(self, hand_code: int, ds: np.ndarray, com: np.ndarray,
                  obj: np.ndarray) -> np.ndarray:
        if hand_code == 2:
            return (self._reach_side_at(HandSide.LEFT, ds, com, obj)
                    & self._reach_side_at(HandSide.RIGHT, ds, com, obj))
        side = HandSide.LEFT if hand_code == 0 else HandSide.RIGHT
        return self._reach_side_at(side, ds, com, obj)

    # -- successor generation ----------------------------------------------------

    def successors(self, s: PlanState) -> list[tuple[PlanState, float]]:
        rows, costs = self._succ_rows(self.row_of(s))
        return [(self.state_of(int(r)), float(c)) for r, c in zip(rows, costs)]

    def _succ_rows(self, row: int) -> tuple[np.ndarray, np.ndarray]:
        cached = self._succs.get(row)
        if cached is not None:
            return cached
        rows, costs = self._generate(row)
        self._succs[row] = (rows, costs)
        for t in rows:
            self._preds.setdefault(int(t), []).append(row)
        if self._idx[row] >= self.last:
            self._goal_preds.add(row)
        return rows, costs

    def _generate(self, row: int) -> tuple[np.ndarray, np.ndarray]:
        maps = self.problem.maps
        cfg = self.cfg
        idx = int(self._idx[row])
        rg = int(self._rg[row])
        hand_code = int(self._hand[row])
        old_stance = self._poses[row, 0:3].copy()
        new_stance = self._poses[row, 3:6].copy()
        new_stance_pose = Pose2(*new_stance)
        new_swing_side = _SIDE_FROM_CODE[int(self._side[row])]  # old stance side
        new_side_code = 1 - int(self._side[row])  # new stance side

        offsets = self._acts[new_swing_side]
        ident = self._act_ident[new_swing_side]
        landings = compose_offsets(new_stance_pose, offsets)
        landings[ident] = old_stance  # no-stepping keeps the foot where it was

        mids = feet_mid_poses(np.broadcast_to(new_stance, landings.shape),
                              landings)
        robot_free = self._oset.boxes_free(mids, self.problem.robot_box)

        jmax = min(cfg.n_obj_max, self.last - idx)
        hands = (2,) if hand_code == 2 else (0, 1)

        # switchability depends on the old state and the hand labels only
        sw_ok = {}
        old_mid = feet_mid_poses(old_stance[None, :], new_stance[None, :])
        obj_old = self._ppose[idx][None, :]
        for h in hands:
            if h == hand_code:
                sw_ok[h] = True
                continue
            d_old = (self._cum[idx] - self._cum[rg]) if maps.rolling else 0.0
            sw_ok[h] = bool(
                self._reach_batch(hand_code, d_old, old_mid, obj_old)[0]
                and self._reach_batch(h, 0.0, old_mid, obj_old)[0])

        # quantized key parts, vectorized once per expansion
        n_act = landings.shape[0]
        lq = np.rint(landings[:, 0:2] / QUANT_LIN).astype(np.int64)
        la = _quant_angles(landings[:, 2])
        land_keys = [(int(lq[i, 0]), int(lq[i, 1]), int(la[i]))
                     for i in range(n_act)]
        stance_key = (round(float(new_stance[0]) / QUANT_LIN),
                      round(float(new_stance[1]) / QUANT_LIN),
                      _quant_angle(float(new_stance[2])), new_side_code)

        out_rows: list[int] = []
        seen: set[int] = set()
        for h in hands:
            if not sw_ok[h]:
                continue
            new_rg = (idx if h != hand_code else rg) if maps.rolling else 0
            js = np.arange(jmax + 1)
            js = js[self._obj_free[idx + js]]
            if maps.rolling:
                d_new = self._cum[idx + js] - self._cum[new_rg]
                js = js[d_new <= maps.max_roll_distance + 1e-9]
            if len(js) == 0:
                continue
            mid_idx = (2 * idx + js) // 2
            if maps.rolling:
                d_new = self._cum[idx + js] - self._cum[new_rg]
                d_mid = self._cum[mid_idx] - self._cum[new_rg]
            else:
                d_new = d_mid = np.zeros(len(js))
            # (mv2): CoM on the new stance foot, object at the mid pose
            com2 = np.broadcast_to(new_stance, (len(js), 3))
            mv2 = self._reach_at(h, d_mid, com2, self._ppose[mid_idx])
            js = js[mv2]
            if len(js) == 0:
                continue
            d_new = d_new[mv2]
            # (mv3): new feet midpoint, object at the new pose; one batched
            # query over the (increment x landing) grid
            nj = len(js)
            com3 = np.tile(mids, (nj, 1))
            obj3 = np.repeat(self._ppose[idx + js], n_act, axis=0)
            mv3 = self._reach_at(h, np.repeat(d_new, n_act), com3, obj3)
            valid = mv3.reshape(nj, n_act) & robot_free[None, :]
            for jj in range(nj):
                row_valid = valid[jj]
                if not row_valid.any():
                    continue
                idx_j = int(idx + js[jj])
                tail = (idx_j, h, new_rg)
                for i in np.nonzero(row_valid)[0]:
                    t = self._register_keyed(stance_key + land_keys[i] + tail,
                                             new_stance, landings[i], idx_j,
                                             h, new_rg, new_side_code)
                    if t not in seen:
                        seen.add(t)
                        out_rows.append(t)
        rows = np.array(out_rows, dtype=np.int64)
        # costs from stored poses so they agree with _cost_rows exactly
        return rows, self._costs_from(row, rows)

    # -- search core ---------------------------------------------------------

    def _key(self, row: int) -> tuple[float, float]:
        """Heap-space key: (k1, -k2); smaller k1 first, larger k2 first."""
        g, rhs, h = self._g[row], self._rhs[row], self._h[row]
        if g > rhs:
            return (rhs + self._eps * h, -rhs)
        return (g + h, -g)

    def _goal_key(self) -> tuple[float, float]:
        m = min(self._goal_g, self._goal_rhs)
        return (m, -m)

    def _push(self, row: int) -> None:
        k1, k2 = self._key(row)
        self._seq += 1
        heapq.heappush(self._open, (k1, k2, self._seq, row))

    def _update_vertex(self, row: int) -> None:
        if row in self._sources:
            return
        if self._g[row] != self._rhs[row]:
            self._incons.add(row)
            if self._closed_at[row] != self._epoch:
                self._push(row)
        else:
            self._incons.discard(row)

    def _recompute_rhs(self, row: int) -> None:
        if row in self._sources:
            return
        preds = self._preds.get(row)
        if not preds:
            self._rhs[row] = _INF
            return
        arr = np.array(preds, dtype=np.int64)
        vals = self._g[arr] + self._cost_rows(arr, row)
        self._rhs[row] = float(vals.min())

    def _update_goal_rhs(self) -> None:
        if not self._goal_preds:
            self._goal_rhs = _INF
        else:
            arr = np.array(sorted(self._goal_preds), dtype=np.int64)
            self._goal_rhs = float(self._g[arr].min())

    def _peek(self):
        """Valid smallest heap key, cleaning stale entries; None when empty."""
        while self._open:
            k1, k2, _, row = self._open[0]
            if self._g[row] == self._rhs[row]:
                heapq.heappop(self._open)
                continue
            cur = self._key(row)
            if cur != (k1, k2):
                heapq.heappop(self._open)
                self._push(row)
                continue
            return (k1, k2)
        return None

    def _compute_path(self, deadline: float) -> str:
        """LPA*-style propagation until the virtual goal is settled."""
        ticks = 0
        while True:
            top = self._peek()
            if top is None or self._goal_key() <= top:
                # nothing in the queue beats the goal: expand or finish it
                if self._goal_g != self._goal_rhs:
                    self._goal_g = (self._goal_rhs
                                    if self._goal_g > self._goal_rhs else _INF)
                    continue
                if self._goal_g < _INF:
                    return "converged"
                if top is None:
                    return "exhausted"
                # goal unreachable so far; keep expanding the frontier
            _, _, _, row = heapq.heappop(self._open)

            ticks += 1
            if ticks % 64 == 0 and time.perf_counter() > deadline:
                return "timeout"
            self.expanded_total += 1
            if self._g[row] > self._rhs[row]:
                self._g[row] = self._rhs[row]
                self._incons.discard(row)
                self._closed_at[row] = self._epoch
                rows, costs = self._succ_rows(row)
                if len(rows):
                    base = self._g[row] + costs
                    for t, v in zip(rows, base):
                        t = int(t)
                        if v < self._rhs[t]:
                            self._rhs[t] = v
                            self._update_vertex(t)
                if self._idx[row] >= self.last and self._g[row] < self._goal_rhs:
                    self._goal_rhs = self._g[row]
            else:
                self._g[row] = _INF
                self._update_vertex(row)
                rows, _ = self._succ_rows(row)
                for t in rows:
                    self._recompute_rhs(int(t))
                    self._update_vertex(int(t))
                if self._idx[row] >= self.last:
                    self._update_goal_rhs()

    # -- driver ----------------------------------------------------------------

    def _init_start(self) -> bool:
        p = self.problem
        mid = mid_pose(p.initial_left, p.initial_right)
        from .collision import state_collision_free

        if not state_collision_free(mid, p.robot_box, p.path.poses[0],
                                    p.obj_box, self._obstacles):
            self.outcome = "infeasible: start in collision"
            return False
        com = feet_mid_poses(p.initial_left.as_array()[None, :],
                             p.initial_right.as_array()[None, :])
        hand_code = _HAND_CODE[p.start_hand]
        if not self._reach_batch(hand_code, 0.0, com, self._ppose[0][None, :])[0]:
            self.outcome = "infeasible: object unreachable at start"
            return False
        feet = {FootSide.LEFT: p.initial_left, FootSide.RIGHT: p.initial_right}
        for stance_side in _SIDES:
            swing_side = stance_side.other()
            sp, wp = feet[stance_side], feet[swing_side]
            row = self._register((sp.x, sp.y, sp.yaw), _SIDE_CODE[stance_side],
                                 (wp.x, wp.y, wp.yaw), 0, hand_code, 0)
            self._rhs[row] = 0.0
            self._sources.add(row)
            self._incons.add(row)
            self._push(row)
        return True

    def _reseed_open(self) -> None:
        self._open = []
        self._epoch += 1
        for row in list(self._incons):
            if self._g[row] != self._rhs[row]:
                self._push(row)
            else:
                self._incons.discard(row)
        for row in self._sources:
            if self._g[row] != self._rhs[row]:
                self._push(row)

    def _extract(self) -> tuple[tuple[PlanRecord, ...], int]:
        # best goal state
        arr = np.array(sorted(self._goal_preds), dtype=np.int64)
        best = int(arr[int(np.argmin(self._g[arr]))])
        chain = [best]
        while chain[-1] not in self._sources:
            row = chain[-1]
            preds = np.array(self._preds[row], dtype=np.int64)
            vals = self._g[preds] + self._cost_rows(preds, row)
            k = int(np.argmin(vals))
            chain.append(int(preds[k]))
        chain.reverse()
        records = []
        cum = 0.0
        footsteps = 0
        prev = None
        for k, row in enumerate(chain):
            s = self.state_of(row)
            if prev is not None:
                cum += transition_cost(prev, s, self.path, self.cfg)
                if _stepped(prev, s):
                    footsteps += 1
            records.append(PlanRecord(k, s.stance_side, s.stance_pose,
                                      s.swing_pose, s.hand, s.obj_index, cum))
            prev = s
        return tuple(records), footsteps

    def solve(self, budget: float | None = None):
        """Yield one Solution per converged inflation step (anytime)."""
        if self._t0 is not None:
            raise RuntimeError("planner instances are single-query; "
                               "use replan() for graph updates")
        self._t0 = time.perf_counter()
        deadline = self._t0 + (budget if budget is not None
                               else self.cfg.time_budget)
        if not self._init_start():
            return
        self._eps = self.cfg.epsilon_init
        yield from self._run_schedule(deadline)

    def _run_schedule(self, deadline: float):
        while True:
            status = self._compute_path(deadline)
            if status == "timeout":
                if self.outcome == "unsolved":
                    self.outcome = "timeout"
                return
            if status == "exhausted" and self._goal_g == _INF:
                self.outcome = "infeasible: goal unreachable"
                return
            records, footsteps = self._extract()
            elapsed = time.perf_counter() - self._t0
            sol = Solution(self._eps, float(self._goal_g), records, footsteps,
                           self.expanded_total, elapsed)
            self.stats_rows.append((self._eps, sol.cost, footsteps,
                                    self.expanded_total, elapsed))
            self.outcome = "solved"
            yield sol
            if self._eps <= 1.0 + 1e-12:
                return
            self._eps = max(self._eps * self.cfg.epsilon_decay, 1.0)
            self._reseed_open()
            self._update_goal_rhs()

    # -- incremental replanning ---------------------------------------------

    def replan(self, delta: ObstacleDelta, budget: float | None = None):
        """Repair the search after an obstacle change; yields Solutions.

        Only transitions whose collision outcome can change are
        re-evaluated; the rest of the stored search effort is reused.
        """
        if self._t0 is None:
            raise RuntimeError("replan needs a previous solve() on this instance")
        self._t0 = time.perf_counter()
        deadline = self._t0 + (budget if budget is not None
                               else self.cfg.time_budget)
        self.repair_expansions_start = self.expanded_total

        if (not delta.add and not delta.remove_indices
                and self._eps <= 1.0 + 1e-12 and self._goal_g < _INF
                and self._goal_g == self._goal_rhs):
            # nothing changed and the search is already settled at
            # epsilon 1: re-emit the incumbent without touching the queue
            records, footsteps = self._extract()
            sol = Solution(self._eps, float(self._goal_g), records, footsteps,
                           self.expanded_total, time.perf_counter() - self._t0)
            self.stats_rows.append((self._eps, sol.cost, footsteps,
                                    self.expanded_total, sol.elapsed))
            yield sol
            return

        old_obj_free = self._obj_free.copy()
        removed = [self._obstacles[i] for i in delta.remove_indices]
        keep = [ob for i, ob in enumerate(self._obstacles)
                if i not in set(delta.remove_indices)]
        self._obstacles = keep + list(delta.add)
        self._rebuild_obstacles()

        changed_obj = np.nonzero(old_obj_free != self._obj_free)[0]
        changed_boxes = list(delta.add) + removed
        dirty = self._dirty_rows(changed_obj, changed_boxes)

        for row in dirty:
            old_rows, _ = self._succs.pop(row)
            old_set = {int(t) for t in old_rows}
            new_rows, new_costs = self._generate(row)
            self._succs[row] = (new_rows, new_costs)
            new_set = {int(t) for t in new_rows}
            for t in new_set - old_set:
                plist = self._preds.setdefault(t, [])
                if row not in plist:
                    plist.append(row)
            for t in old_set - new_set:
                plist = self._preds.get(t, [])
                if row in plist:
                    plist.remove(row)
            for t in old_set | new_set:
                self._recompute_rhs(t)
                self._update_vertex(t)
        self._reseed_open()
        self._update_goal_rhs()
        yield from self._run_schedule(deadline)

    def _dirty_rows(self, changed_obj: np.ndarray,
                    changed_boxes: list[Obb2]) -> list[int]:
        if len(changed_obj) == 0 and not changed_boxes:
            return []
        rows = np.array(sorted(self._succs.keys()), dtype=np.int64)
        if len(rows) == 0:
            return []
        dirty = np.zeros(len(rows), dtype=bool)
        if len(changed_obj) > 0:
            flag = np.zeros(len(self.path), dtype=bool)
            flag[changed_obj] = True
            csum = np.concatenate([[0], np.cumsum(flag)])
            lo = self._idx[rows]
            hi = np.minimum(lo + self.cfg.n_obj_max, self.last)
            dirty |= (csum[hi + 1] - csum[lo]) > 0
        if changed_boxes:
            tmpl = self.problem.robot_box
            reach = (self.max_stride
                     + math.hypot(tmpl.center.x, tmpl.center.y)
                     + tmpl.radius())
            sw = self._poses[rows, 3:5]
            for ob in changed_boxes:
                r = reach + ob.radius()
                d = np.hypot(sw[:, 0] - ob.center.x, sw[:, 1] - ob.center.y)
                dirty |= d <= r
        return [int(r) for r in rows[dirty]]
