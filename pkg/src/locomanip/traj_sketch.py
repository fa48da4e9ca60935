"""Balance trajectory sketch for a planned footstep sequence.

Turns plan records into swing-foot splines, a ZMP reference, a preview-
controlled CoM trajectory on the cart-table model, and a support-region
validity report.  This is a dynamics sketch: no joint trajectories, no
whole-body IK.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import ConvexHull

from .fr_planner import PlanRecord
from .se2 import Pose2, mid_pose, wrap_angle

GRAVITY = 9.81
DEFAULT_COM_HEIGHT = 0.8
DEFAULT_APEX = 0.05
DEFAULT_DT = 0.005
DEFAULT_FOOT_LENGTH = 0.24
DEFAULT_FOOT_WIDTH = 0.12


@dataclass(frozen=True)
class TimedTraj:
    """Uniformly sampled trajectory: samples[i] is the state at i * dt."""

    dt: float
    samples: np.ndarray

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return (len(self.samples) - 1) * self.dt

    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.dt


@dataclass(frozen=True)
class GaitTiming:
    """Per-step support durations plus an initial standing period.

    The lead-in lets the preview window fill while the robot stands on
    both feet, so the CoM can pre-lean before the first blend; without
    it the first step's tracking transient dominates the error budget.
    """

    single_support: float = 0.8
    double_support: float = 0.2
    lead_in: float = 1.0

    def __post_init__(self):
        if self.single_support <= 0.0 or self.double_support <= 0.0:
            raise ValueError("support durations must be positive")
        if self.lead_in < 0.0:
            raise ValueError("lead_in cannot be negative")


# ---------------------------------------------------------------------------
# Swing foot spline
# ---------------------------------------------------------------------------

def swing_spline(start: Pose2, end: Pose2, apex_height: float = DEFAULT_APEX,
                 duration: float = 0.8, dt: float = DEFAULT_DT) -> TimedTraj:
    """Swing trajectory (x, y, z, yaw) lifting through an apex.

    Vertical profile is a clamped cubic through lift-off (z=0), the
    apex at mid-time, and touch-down (z=0); zero boundary slopes keep
    the maximum at the apex.  Horizontal motion eases in and out.
    """
    if duration <= 0.0:
        raise ValueError("duration must be positive")
    n = max(2, int(round(duration / dt)))
    t = np.linspace(0.0, duration, n + 1)
    zsp = CubicSpline([0.0, duration / 2.0, duration], [0.0, apex_height, 0.0],
                      bc_type="clamped")
    z = np.maximum(zsp(t), 0.0)
    tau = t / duration
    blend = tau * tau * (3.0 - 2.0 * tau)
    dyaw = wrap_angle(end.yaw - start.yaw)
    out = np.column_stack([
        start.x + blend * (end.x - start.x),
        start.y + blend * (end.y - start.y),
        z,
        start.yaw + blend * dyaw,
    ])
    return TimedTraj(dt, out)


# ---------------------------------------------------------------------------
# ZMP reference and support phases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SupportPhase:
    """One support interval: which feet carry the robot and for how long."""

    kind: str                      # "double" or "single"
    start_index: int               # first sample index of the phase
    sample_count: int
    feet: tuple[Pose2, ...]        # planted foot poses during the phase


def _phase_schedule(plan: list[PlanRecord], timing: GaitTiming,
                    dt: float) -> list[SupportPhase]:
    n_ds = max(1, int(round(timing.double_support / dt)))
    n_ss = max(1, int(round(timing.single_support / dt)))
    n_lead = int(round(timing.lead_in / dt))
    phases = []
    at = 0
    if n_lead > 0 and len(plan) > 1:
        phases.append(SupportPhase("double", 0, n_lead,
                                   (plan[0].stance_pose, plan[0].swing_pose)))
        at = n_lead
    for prev, cur in zip(plan, plan[1:]):
        phases.append(SupportPhase("double", at, n_ds,
                                   (prev.stance_pose, prev.swing_pose)))
        at += n_ds
        phases.append(SupportPhase("single", at, n_ss, (cur.stance_pose,)))
        at += n_ss
    return phases


def zmp_reference(plan: list[PlanRecord], timing: GaitTiming,
                  dt: float = DEFAULT_DT) -> TimedTraj:
    """Piecewise ZMP reference from the footstep sequence.

    Double support blends linearly from the previous anchor to the next
    stance-foot center; single support holds that center while the other
    foot swings.  The lead-in holds the initial feet midpoint.
    """
    if not plan:
        raise ValueError("plan must contain at least the start record")
    anchor = mid_pose(plan[0].stance_pose, plan[0].swing_pose)
    ax, ay = anchor.x, anchor.y
    points = [(ax, ay)]
    if len(plan) > 1:
        points.extend([(ax, ay)] * int(round(timing.lead_in / dt)))
    for prev, cur in zip(plan, plan[1:]):
        n_ds = max(1, int(round(timing.double_support / dt)))
        n_ss = max(1, int(round(timing.single_support / dt)))
        tx, ty = cur.stance_pose.x, cur.stance_pose.y
        for i in range(1, n_ds + 1):
            a = i / n_ds
            points.append((ax + a * (tx - ax), ay + a * (ty - ay)))
        points.extend([(tx, ty)] * n_ss)
        ax, ay = tx, ty
    return TimedTraj(dt, np.array(points))


# ---------------------------------------------------------------------------
# Preview control on the cart-table model
# ---------------------------------------------------------------------------

class RiccatiError(RuntimeError):
    pass


def _preview_gains(com_height: float, horizon: float, dt: float,
                   qe: float = 1.0, r: float = 1e-6):
    a = np.array([[1.0, dt, dt * dt / 2.0],
                  [0.0, 1.0, dt],
                  [0.0, 0.0, 1.0]])
    b = np.array([[dt ** 3 / 6.0], [dt * dt / 2.0], [dt]])
    c = np.array([[1.0, 0.0, -com_height / GRAVITY]])
    a1 = np.zeros((4, 4))
    a1[0, 0] = 1.0
    a1[0, 1:] = c @ a
    a1[1:, 1:] = a
    b1 = np.vstack([c @ b, b])
    q = np.zeros((4, 4))
    q[0, 0] = qe

    p = q.copy()
    for _ in range(10_000):
        pb = p @ b1
        den = r + float((b1.T @ pb)[0, 0])
        pn = a1.T @ p @ a1 - (a1.T @ pb) @ (pb.T @ a1) / den + q
        delta = float(np.max(np.abs(pn - p)))
        p = pn
        if delta < 1e-12 * (1.0 + float(np.max(np.abs(p)))):
            break
    else:
        raise RiccatiError("preview-gain Riccati iteration did not converge "
                           "within 10^4 steps")

    den = r + float(b1.T @ p @ b1)
    k = (b1.T @ p @ a1)[0] / den
    ki, kx = float(k[0]), k[1:]
    ac = a1 - b1 @ k[None, :]
    n = int(round(horizon / dt))
    f = np.zeros(n)
    x = p @ np.array([-1.0, 0.0, 0.0, 0.0])
    for j in range(n):
        f[j] = float(b1[:, 0] @ x) / den
        x = ac.T @ x
    return a, b[:, 0], c[0], ki, kx, f


def preview_com(zmp_ref: TimedTraj, com_height: float = DEFAULT_COM_HEIGHT,
                preview_horizon: float = 1.6, dt: float | None = None,
                return_states: bool = False):
    """CoM and realized ZMP tracking a previewed ZMP reference.

    Runs an incremental-state LQ preview controller per horizontal axis
    on the cart-table model (output zmp = pos - (h/g) * acc); the
    reference is held constant beyond its end for the preview window.
    With return_states the full (pos, vel, acc) history per axis is
    returned as a third value of shape (n, 3, 2).
    """
    if com_height <= 0.0:
        raise ValueError("com_height must be positive")
    if preview_horizon < 1.0:
        raise ValueError("preview horizon must cover at least 1 s")
    dt = dt or zmp_ref.dt
    a, b, _, ki, kx, f = _preview_gains(com_height, preview_horizon, dt)
    coef = com_height / GRAVITY
    ref = zmp_ref.samples
    n = len(ref)
    com = np.zeros((n, 2))
    zmp = np.zeros((n, 2))
    states = np.zeros((n, 3, 2))
    for axis in range(2):
        r_ext = np.concatenate([ref[:, axis],
                                np.full(len(f) + 1, ref[-1, axis])])
        dref = np.diff(r_ext)
        x = np.array([ref[0, axis], 0.0, 0.0])
        xprev = x.copy()
        u = 0.0
        for k in range(n):
            y = x[0] - coef * x[2]
            com[k, axis] = x[0]
            zmp[k, axis] = y
            states[k, :, axis] = x
            du = (-ki * (y - ref[k, axis]) - kx @ (x - xprev)
                  - f @ dref[k + 1:k + 1 + len(f)])
            u += du
            xprev = x
            x = a @ x + b * u
    if return_states:
        return TimedTraj(dt, com), TimedTraj(dt, zmp), states
    return TimedTraj(dt, com), TimedTraj(dt, zmp)


# ---------------------------------------------------------------------------
# Support-region validity
# ---------------------------------------------------------------------------

def _foot_corners(pose: Pose2, length: float, width: float) -> np.ndarray:
    hx, hy = length / 2.0, width / 2.0
    local = np.array([[hx, hy], [-hx, hy], [-hx, -hy], [hx, -hy]])
    cs, sn = math.cos(pose.yaw), math.sin(pose.yaw)
    rot = np.array([[cs, -sn], [sn, cs]])
    return local @ rot.T + np.array([pose.x, pose.y])


def _polygon_margin(point: np.ndarray, hull_pts: np.ndarray) -> float:
    """Signed distance to a convex polygon boundary; positive inside."""
    if len(hull_pts) > 3:
        hull = ConvexHull(hull_pts)
        verts = hull_pts[hull.vertices]
    else:
        verts = hull_pts
    best = math.inf
    n = len(verts)
    for i in range(n):
        a = verts[i]
        b = verts[(i + 1) % n]
        edge = b - a
        norm = math.hypot(*edge)
        if norm < 1e-12:
            continue
        inward = np.array([-edge[1], edge[0]]) / norm  # CCW hull
        best = min(best, float(inward @ (point - a)))
    return best


@dataclass(frozen=True)
class PhaseReport:
    kind: str
    start_time: float
    end_time: float
    min_margin: float
    ok: bool


@dataclass(frozen=True)
class SupportReport:
    ok: bool
    worst_margin: float
    phases: tuple[PhaseReport, ...]
    margins: np.ndarray


def zmp_in_support(zmp_realized: TimedTraj, plan: list[PlanRecord],
                   timing: GaitTiming, margin: float = 0.0,
                   foot_length: float = DEFAULT_FOOT_LENGTH,
                   foot_width: float = DEFAULT_FOOT_WIDTH) -> SupportReport:
    """Check every sample's ZMP against the active support region.

    Single support uses the stance-foot rectangle; double support uses
    the convex hull of both foot rectangles.  A phase passes when its
    minimum signed margin stays at or above `margin`.
    """
    phases = _phase_schedule(plan, timing, zmp_realized.dt)
    pts = zmp_realized.samples
    margins = np.full(len(pts), math.inf)
    reports = []
    if not phases:
        feet = (plan[0].stance_pose, plan[0].swing_pose)
        hull = np.vstack([_foot_corners(f, foot_length, foot_width)
                          for f in feet])
        for i in range(len(pts)):
            margins[i] = _polygon_margin(pts[i], hull)
        worst = float(margins.min()) if len(pts) else math.inf
        rep = PhaseReport("double", 0.0, zmp_realized.duration, worst,
                          worst >= margin)
        return SupportReport(rep.ok, worst, (rep,), margins)

    for ph in phases:
        hull = np.vstack([_foot_corners(f, foot_length, foot_width)
                          for f in ph.feet])
        lo = ph.start_index
        hi = min(ph.start_index + ph.sample_count, len(pts) - 1)
        vals = []
        for i in range(lo, hi + 1):
            m = _polygon_margin(pts[i], hull)
            margins[i] = min(margins[i], m) if math.isfinite(margins[i]) else m
            vals.append(m)
        worst = float(min(vals)) if vals else math.inf
        reports.append(PhaseReport(ph.kind, lo * zmp_realized.dt,
                                   hi * zmp_realized.dt, worst,
                                   worst >= margin))
    worst_all = float(min(r.min_margin for r in reports))
    ok = all(r.ok for r in reports)
    return SupportReport(ok, worst_all, tuple(reports), margins)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def save_sketch_csv(path, zmp_ref: TimedTraj, com: TimedTraj,
                    zmp: TimedTraj) -> None:
    """(t, com_x, com_y, zmp_ref_x, zmp_ref_y, zmp_x, zmp_y) rows."""
    with open(path, "w") as f:
        f.write("t,com_x,com_y,zmp_ref_x,zmp_ref_y,zmp_x,zmp_y\n")
        for i in range(len(com)):
            t = i * com.dt
            f.write(f"{t:.9g},{com.samples[i, 0]:.9g},{com.samples[i, 1]:.9g},"
                    f"{zmp_ref.samples[i, 0]:.9g},{zmp_ref.samples[i, 1]:.9g},"
                    f"{zmp.samples[i, 0]:.9g},{zmp.samples[i, 1]:.9g}\n")


def sketch_svg(path, plan: list[PlanRecord], zmp: TimedTraj, com: TimedTraj,
               foot_length: float = DEFAULT_FOOT_LENGTH,
               foot_width: float = DEFAULT_FOOT_WIDTH) -> None:
    """Top view: footprints with the ZMP and CoM paths over them."""
    from .svg import SvgCanvas

    feet = []
    for rec in plan:
        feet.append((rec.stance_pose, "#2a7f2a"))
        feet.append((rec.swing_pose, "#b03030"))
    xs = [p.x for p, _ in feet] + list(zmp.samples[:, 0])
    ys = [p.y for p, _ in feet] + list(zmp.samples[:, 1])
    canvas = SvgCanvas(min(xs) - 0.3, max(xs) + 0.3, min(ys) - 0.3,
                       max(ys) + 0.3)
    for pose, color in feet:
        canvas.rect(pose, foot_length, foot_width, stroke=color)
    canvas.polyline(zmp.samples, stroke="#1f4fd0", width=0.008,
                    label="zmp")
    canvas.polyline(com.samples, stroke="#d08a1f", width=0.008,
                    label="com")
    canvas.write(path)
