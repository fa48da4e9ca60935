"""SE(2) poses, Reeds-Shepp steering, and discretized paths.

Every other module builds on the pose algebra here.  Angles are stored
normalized to (-pi, pi]; positions are meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

STRAIGHT = "straight"
LEFT_ARC = "left-arc"
RIGHT_ARC = "right-arc"


def wrap_angle(a: float) -> float:
    """Wrap an angle into (-pi, pi].  Exactly -pi maps to +pi."""
    a = math.fmod(a, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    elif a > math.pi:
        a -= TWO_PI
    return a


@dataclass(frozen=True)
class Pose2:
    """An SE(2) element: planar position plus heading."""

    x: float
    y: float
    yaw: float

    def __post_init__(self):
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.yaw])


IDENTITY = Pose2(0.0, 0.0, 0.0)


def compose(a: Pose2, b: Pose2) -> Pose2:
    """Group product a . b (apply b in the frame of a)."""
    c, s = math.cos(a.yaw), math.sin(a.yaw)
    return Pose2(a.x + c * b.x - s * b.y,
                 a.y + s * b.x + c * b.y,
                 a.yaw + b.yaw)


def inverse(a: Pose2) -> Pose2:
    c, s = math.cos(a.yaw), math.sin(a.yaw)
    return Pose2(-c * a.x - s * a.y, s * a.x - c * a.y, -a.yaw)


def relative_to(a: Pose2, b: Pose2) -> Pose2:
    """Pose of b expressed in the frame of a."""
    return compose(inverse(a), b)


def apply_action(stance: Pose2, action: Pose2) -> Pose2:
    """Landing pose of a foot placed at `action` relative to the stance foot."""
    return compose(stance, action)


def transform_point(pose: Pose2, px: float, py: float) -> tuple[float, float]:
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    return (pose.x + c * px - s * py, pose.y + s * px + c * py)


def mid_pose(a: Pose2, b: Pose2) -> Pose2:
    """Midpoint pose: arithmetic mean position, shorter-arc yaw midpoint.

    When the yaws are exactly pi apart the arc through +pi is taken, which
    follows from wrap_angle mapping a difference of -pi to +pi.
    """
    dyaw = wrap_angle(b.yaw - a.yaw)
    return Pose2(0.5 * (a.x + b.x), 0.5 * (a.y + b.y), a.yaw + 0.5 * dyaw)


def interpolate(a: Pose2, b: Pose2, alpha: float) -> Pose2:
    """Straight-line position blend with shorter-arc yaw blend."""
    dyaw = wrap_angle(b.yaw - a.yaw)
    return Pose2(a.x + alpha * (b.x - a.x),
                 a.y + alpha * (b.y - a.y),
                 a.yaw + alpha * dyaw)


def planar_distance(a: Pose2, b: Pose2) -> float:
    return math.hypot(b.x - a.x, b.y - a.y)


def compose_offsets(pose: Pose2, offsets: np.ndarray) -> np.ndarray:
    """Compose one pose with an (N, 3) array of pose offsets."""
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    out = np.empty_like(offsets, dtype=float)
    out[:, 0] = pose.x + c * offsets[:, 0] - s * offsets[:, 1]
    out[:, 1] = pose.y + s * offsets[:, 0] + c * offsets[:, 1]
    out[:, 2] = wrap_angles(pose.yaw + offsets[:, 2])
    return out


def wrap_angles(a: np.ndarray) -> np.ndarray:
    """Vectorized wrap into (-pi, pi]."""
    a = np.mod(np.asarray(a, dtype=float), TWO_PI)
    a = np.where(a > math.pi, a - TWO_PI, a)
    a = np.where(a <= -math.pi, a + TWO_PI, a)
    return a


# ---------------------------------------------------------------------------
# Path segments and discretized paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PathSegment:
    """One primitive of a steering curve.

    signed_length is the distance traveled (negative when in reverse),
    measured along the arc for arc kinds.  turning_radius is only
    meaningful for arcs and must be positive there.
    """

    kind: str
    signed_length: float
    turning_radius: float = 0.0

    def __post_init__(self):
        if self.kind not in (STRAIGHT, LEFT_ARC, RIGHT_ARC):
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if self.kind != STRAIGHT and self.turning_radius <= 0.0:
            raise ValueError("arc segments need turning_radius > 0")


def step_along(pose: Pose2, segment: PathSegment, s: float) -> Pose2:
    """Pose after traveling distance s (0 <= s <= |signed_length|) along a segment."""
    d = math.copysign(s, segment.signed_length)
    if segment.kind == STRAIGHT:
        return Pose2(pose.x + d * math.cos(pose.yaw),
                     pose.y + d * math.sin(pose.yaw),
                     pose.yaw)
    r = segment.turning_radius
    if segment.kind == LEFT_ARC:
        cx = pose.x - r * math.sin(pose.yaw)
        cy = pose.y + r * math.cos(pose.yaw)
        ang = pose.yaw - 0.5 * math.pi + d / r
        return Pose2(cx + r * math.cos(ang), cy + r * math.sin(ang), pose.yaw + d / r)
    cx = pose.x + r * math.sin(pose.yaw)
    cy = pose.y - r * math.cos(pose.yaw)
    ang = pose.yaw + 0.5 * math.pi - d / r
    return Pose2(cx + r * math.cos(ang), cy + r * math.sin(ang), pose.yaw - d / r)


def trace_segments(start: Pose2, segments: list[PathSegment]) -> Pose2:
    pose = start
    for seg in segments:
        pose = step_along(pose, seg, abs(seg.signed_length))
    return pose


@dataclass(frozen=True)
class DiscretePath:
    """A pose sequence with cumulative traveled arc length per pose."""

    poses: tuple[Pose2, ...]
    cumulative_arclength: np.ndarray = field(compare=False)

    def __post_init__(self):
        cum = np.asarray(self.cumulative_arclength, dtype=float)
        if len(cum) != len(self.poses):
            raise ValueError("arclength table must match pose count")
        if len(cum) == 0:
            raise ValueError("a path needs at least one pose")
        if abs(cum[0]) > 1e-12 or np.any(np.diff(cum) < -1e-12):
            raise ValueError("cumulative arclength must start at 0 and be non-decreasing")
        object.__setattr__(self, "cumulative_arclength", cum)

    def __len__(self) -> int:
        return len(self.poses)

    @property
    def length(self) -> float:
        return float(self.cumulative_arclength[-1])

    @staticmethod
    def from_poses(poses: list[Pose2]) -> "DiscretePath":
        """Build a path whose arc length accumulates planar pose distances."""
        cum = np.zeros(len(poses))
        for i in range(1, len(poses)):
            cum[i] = cum[i - 1] + planar_distance(poses[i - 1], poses[i])
        return DiscretePath(tuple(poses), cum)


def path_distance(path: DiscretePath, i: int, j: int) -> float:
    """Distance along the path between indices i and j."""
    n = len(path)
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"path index out of range: i={i}, j={j}, length={n}")
    cum = path.cumulative_arclength
    return float(abs(cum[j] - cum[i]))


def discretize(segments: list[PathSegment], start: Pose2, resolution: float) -> DiscretePath:
    """Sample a segment chain at spacing <= resolution, keeping exact joints."""
    if resolution <= 0.0:
        raise ValueError("resolution must be positive")
    poses = [start]
    cum = [0.0]
    pose = start
    base = 0.0
    for seg in segments:
        length = abs(seg.signed_length)
        if length < 1e-15:
            continue
        n = max(1, math.ceil(length / resolution - 1e-12))
        for k in range(1, n + 1):
            s = length * k / n
            poses.append(step_along(pose, seg, s))
            cum.append(base + s)
        pose = poses[-1]
        base += length
    return DiscretePath(tuple(poses), np.array(cum))


# ---------------------------------------------------------------------------
# Reeds-Shepp steering
#
# Closed-form minimum-length word set for a forward/backward car with a
# bounded turning radius.  Solvers below work in scaled coordinates
# (radius 1, start at the origin) and return the signed segment
# parameters (t, u, v); the remaining words are obtained through the
# timeflip / reflect / backwards symmetries.
# ---------------------------------------------------------------------------

_RS_EPS = 1e-10


def _mod2pi(a: float) -> float:
    v = math.fmod(a, TWO_PI)
    if v < -math.pi:
        v += TWO_PI
    elif v > math.pi:
        v -= TWO_PI
    return v


def _polar(x: float, y: float) -> tuple[float, float]:
    return math.hypot(x, y), math.atan2(y, x)


def _lp_sp_lp(x, y, phi):
    u, t = _polar(x - math.sin(phi), y - 1.0 + math.cos(phi))
    if t >= -_RS_EPS:
        v = _mod2pi(phi - t)
        if v >= -_RS_EPS:
            return t, u, v
    return None


def _lp_sp_rp(x, y, phi):
    u1, t1 = _polar(x + math.sin(phi), y - 1.0 - math.cos(phi))
    if u1 * u1 >= 4.0:
        u = math.sqrt(u1 * u1 - 4.0)
        t = _mod2pi(t1 + math.atan2(2.0, u))
        v = _mod2pi(t - phi)
        if t >= -_RS_EPS and v >= -_RS_EPS:
            return t, u, v
    return None


def _lp_rm_l(x, y, phi):
    xi = x - math.sin(phi)
    eta = y - 1.0 + math.cos(phi)
    u1, theta = _polar(xi, eta)
    if u1 <= 4.0:
        u = -2.0 * math.asin(0.25 * u1)
        t = _mod2pi(theta + 0.5 * u + math.pi)
        v = _mod2pi(phi - t + u)
        if t >= -_RS_EPS and u <= _RS_EPS:
            return t, u, v
    return None


def _tau_omega(u, v, xi, eta, phi):
    delta = _mod2pi(u - v)
    a = math.sin(u) - math.sin(delta)
    b = math.cos(u) - math.cos(delta) - 1.0
    t1 = math.atan2(eta * a - xi * b, xi * a + eta * b)
    t2 = 2.0 * (math.cos(delta) - math.cos(v) - math.cos(u)) + 3.0
    tau = _mod2pi(t1 + math.pi) if t2 < 0.0 else _mod2pi(t1)
    return tau, _mod2pi(tau - u + v - phi)


def _lp_rup_lum_rm(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho = 0.25 * (2.0 + math.hypot(xi, eta))
    if rho <= 1.0:
        u = math.acos(rho)
        t, v = _tau_omega(u, -u, xi, eta, phi)
        if t >= -_RS_EPS and v <= _RS_EPS:
            return t, u, v
    return None


def _lp_rum_lum_rp(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho = (20.0 - xi * xi - eta * eta) / 16.0
    if 0.0 <= rho <= 1.0:
        u = -math.acos(rho)
        if u >= -0.5 * math.pi:
            t, v = _tau_omega(u, u, xi, eta, phi)
            if t >= -_RS_EPS and v >= -_RS_EPS:
                return t, u, v
    return None


def _lp_rm_sm_lm(x, y, phi):
    xi = x - math.sin(phi)
    eta = y - 1.0 + math.cos(phi)
    rho, theta = _polar(xi, eta)
    if rho >= 2.0:
        r = math.sqrt(rho * rho - 4.0)
        u = 2.0 - r
        t = _mod2pi(theta + math.atan2(r, -2.0))
        v = _mod2pi(phi - 0.5 * math.pi - t)
        if t >= -_RS_EPS and u <= _RS_EPS and v <= _RS_EPS:
            return t, u, v
    return None


def _lp_rm_sm_rm(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho, theta = _polar(-eta, xi)
    if rho >= 2.0:
        t = theta
        u = 2.0 - rho
        v = _mod2pi(t + 0.5 * math.pi - phi)
        if t >= -_RS_EPS and u <= _RS_EPS and v <= _RS_EPS:
            return t, u, v
    return None


def _lp_rm_s_lm_rp(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho, _ = _polar(xi, eta)
    if rho >= 2.0:
        u = 4.0 - math.sqrt(rho * rho - 4.0)
        if u <= _RS_EPS:
            t = _mod2pi(math.atan2((4.0 - u) * xi - 2.0 * eta,
                                   -2.0 * xi + (u - 4.0) * eta))
            v = _mod2pi(t - phi)
            if t >= -_RS_EPS and v >= -_RS_EPS:
                return t, u, v
    return None


_HALF_PI = 0.5 * math.pi


def _rs_candidates(x: float, y: float, phi: float):
    """Yield (word, params) candidates covering the full RS word set."""
    out = []

    def add(word, params):
        out.append((word, params))

    def variants(solver, word, reflected_word, emit):
        # timeflip negates x/phi and the parameters; reflect negates y/phi
        # and swaps turn directions.
        r = solver(x, y, phi)
        if r:
            add(word, emit(*r))
        r = solver(-x, y, -phi)
        if r:
            add(word, tuple(-p for p in emit(*r)))
        r = solver(x, -y, -phi)
        if r:
            add(reflected_word, emit(*r))
        r = solver(-x, -y, phi)
        if r:
            add(reflected_word, tuple(-p for p in emit(*r)))

    def variants_backwards(solver, word, reflected_word, emit):
        xb = x * math.cos(phi) + y * math.sin(phi)
        yb = x * math.sin(phi) - y * math.cos(phi)
        r = solver(xb, yb, phi)
        if r:
            add(word, emit(*r))
        r = solver(-xb, yb, -phi)
        if r:
            add(word, tuple(-p for p in emit(*r)))
        r = solver(xb, -yb, -phi)
        if r:
            add(reflected_word, emit(*r))
        r = solver(-xb, -yb, phi)
        if r:
            add(reflected_word, tuple(-p for p in emit(*r)))

    three = lambda t, u, v: (t, u, v)
    variants(_lp_sp_lp, "LSL", "RSR", three)
    variants(_lp_sp_rp, "LSR", "RSL", three)
    variants(_lp_rm_l, "LRL", "RLR", three)
    variants_backwards(_lp_rm_l, "LRL", "RLR", lambda t, u, v: (v, u, t))
    variants(_lp_rup_lum_rm, "LRLR", "RLRL", lambda t, u, v: (t, u, -u, v))
    variants(_lp_rum_lum_rp, "LRLR", "RLRL", lambda t, u, v: (t, u, u, v))
    variants(_lp_rm_sm_lm, "LRSL", "RLSR", lambda t, u, v: (t, -_HALF_PI, u, v))
    variants(_lp_rm_sm_rm, "LRSR", "RLSL", lambda t, u, v: (t, -_HALF_PI, u, v))
    variants_backwards(_lp_rm_sm_lm, "LSRL", "RSLR",
                       lambda t, u, v: (v, u, -_HALF_PI, t))
    variants_backwards(_lp_rm_sm_rm, "RSRL", "LSLR",
                       lambda t, u, v: (v, u, -_HALF_PI, t))
    variants(_lp_rm_s_lm_rp, "LRSLR", "RLSRL",
             lambda t, u, v: (t, -_HALF_PI, u, -_HALF_PI, v))
    return out


_KIND_OF = {"L": LEFT_ARC, "R": RIGHT_ARC, "S": STRAIGHT}


def reeds_shepp(start: Pose2, goal: Pose2,
                turning_radius: float) -> tuple[list[PathSegment], float]:
    """Minimum-length Reeds-Shepp curve from start to goal.

    Returns the segment list and the total length (sum of unsigned
    segment lengths, in meters).  Zero-length segments are dropped.
    """
    if turning_radius <= 0.0:
        raise ValueError("turning_radius must be positive")
    rel = relative_to(start, goal)
    x = rel.x / turning_radius
    y = rel.y / turning_radius
    phi = rel.yaw

    best = None
    best_len = math.inf
    for word, params in _rs_candidates(x, y, phi):
        total = sum(abs(p) for p in params)
        if total < best_len - 1e-14:
            best_len = total
            best = (word, params)

    if best is None or best_len < 1e-12:
        return [], 0.0

    word, params = best
    segments = []
    for letter, p in zip(word, params):
        if abs(p) < 1e-12:
            continue
        kind = _KIND_OF[letter]
        segments.append(PathSegment(kind, p * turning_radius,
                                    turning_radius if kind != STRAIGHT else 0.0))
    return segments, best_len * turning_radius


def reeds_shepp_length(start: Pose2, goal: Pose2, turning_radius: float) -> float:
    return reeds_shepp(start, goal, turning_radius)[1]
