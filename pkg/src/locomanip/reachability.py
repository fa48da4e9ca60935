"""Reachability maps: which object poses a hand can reach.

A map is a boolean occupancy grid over object poses expressed in the
robot's CoM frame (x, y, yaw cells).  Rolling objects get a family of
maps indexed by the distance rolled since the last regrasp, because the
grasp point travels around the object as it rolls.

The frame convention: the CoM frame's yaw equals the feet mid-pose yaw
and its position is taken at the feet mid-pose position; the true CoM
offset is absorbed into the reach oracle's shoulder anchors.
"""

from __future__ import annotations

import enum
import math
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .se2 import Pose2, compose, inverse, wrap_angles

TWO_PI = 2.0 * math.pi


class HandSide(enum.Enum):
    LEFT = "left"
    RIGHT = "right"

    def other(self) -> "HandSide":
        return HandSide.RIGHT if self is HandSide.LEFT else HandSide.LEFT


@dataclass(frozen=True)
class GridSpec:
    """SE(2) grid layout for reachability maps."""

    x_range: tuple[float, float] = (-2.0, 2.0)
    y_range: tuple[float, float] = (-2.0, 2.0)
    yaw_count: int = 36
    xy_resolution: float = 0.1
    yaw_resolution: float = math.radians(10.0)

    def __post_init__(self):
        if self.xy_resolution <= 0.0:
            raise ValueError("xy_resolution must be positive")
        if abs(self.yaw_count * self.yaw_resolution - TWO_PI) > 1e-9:
            raise ValueError("yaw cells must tile the full circle")
        for lo, hi in (self.x_range, self.y_range):
            if hi <= lo:
                raise ValueError("grid ranges must be increasing")
        if abs(self.nx * self.xy_resolution - (self.x_range[1] - self.x_range[0])) > 1e-9 \
                or abs(self.ny * self.xy_resolution - (self.y_range[1] - self.y_range[0])) > 1e-9:
            raise ValueError("grid ranges must be multiples of xy_resolution")

    @property
    def nx(self) -> int:
        return int(round((self.x_range[1] - self.x_range[0]) / self.xy_resolution))

    @property
    def ny(self) -> int:
        return int(round((self.y_range[1] - self.y_range[0]) / self.xy_resolution))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.yaw_count)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Flattened (x, y, yaw) center arrays in x-major, y, yaw order."""
        xs = self.x_range[0] + (np.arange(self.nx) + 0.5) * self.xy_resolution
        ys = self.y_range[0] + (np.arange(self.ny) + 0.5) * self.xy_resolution
        yaws = wrap_angles((np.arange(self.yaw_count) + 0.5) * self.yaw_resolution)
        gx, gy, gyaw = np.meshgrid(xs, ys, yaws, indexing="ij")
        return gx.ravel(), gy.ravel(), gyaw.ravel()

    def cell_index(self, x: float, y: float, yaw: float):
        """Cell indices containing the pose, or None when outside x/y range."""
        ix = math.floor((x - self.x_range[0]) / self.xy_resolution)
        iy = math.floor((y - self.y_range[0]) / self.xy_resolution)
        if not (0 <= ix < self.nx and 0 <= iy < self.ny):
            return None
        k = math.floor((yaw % TWO_PI) / self.yaw_resolution) % self.yaw_count
        return ix, iy, k


@dataclass(frozen=True)
class ReachabilityMap:
    """Boolean occupancy over object poses relative to the CoM frame."""

    spec: GridSpec
    bits: np.ndarray = field(compare=False)
    hand: HandSide

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.shape != self.spec.shape:
            raise ValueError(f"bits shape {bits.shape} != grid {self.spec.shape}")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    def cell_count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def mirrored(self) -> "ReachabilityMap":
        """The map for the opposite hand (y and yaw sign flip)."""
        if self.spec.y_range[0] != -self.spec.y_range[1]:
            raise ValueError("mirroring needs a y range symmetric about 0")
        flipped = self.bits[:, ::-1, ::-1].copy()
        # yaw cell k covers (k*res, (k+1)*res); negating maps it onto
        # cell yaw_count-1-k, which the ::-1 above already does.
        return ReachabilityMap(self.spec, flipped, self.hand.other())


def contains(rmap: ReachabilityMap, com: Pose2, obj: Pose2) -> bool:
    """Membership test: is the object pose reachable from this CoM frame?"""
    rel = compose(inverse(com), obj)
    idx = rmap.spec.cell_index(rel.x, rel.y, rel.yaw)
    if idx is None:
        return False
    return bool(rmap.bits[idx])


def contains_batch(rmap: ReachabilityMap, com: np.ndarray,
                   obj: np.ndarray) -> np.ndarray:
    """Vectorized contains for (M, 3) arrays of CoM and object poses."""
    c = np.cos(com[:, 2])
    s = np.sin(com[:, 2])
    dx = obj[:, 0] - com[:, 0]
    dy = obj[:, 1] - com[:, 1]
    rx = c * dx + s * dy
    ry = -s * dx + c * dy
    ryaw = obj[:, 2] - com[:, 2]
    spec = rmap.spec
    ix = np.floor((rx - spec.x_range[0]) / spec.xy_resolution).astype(np.int64)
    iy = np.floor((ry - spec.y_range[0]) / spec.xy_resolution).astype(np.int64)
    k = np.floor(np.mod(ryaw, TWO_PI) / spec.yaw_resolution).astype(np.int64)
    np.mod(k, spec.yaw_count, out=k)
    ok = (ix >= 0) & (ix < spec.nx) & (iy >= 0) & (iy < spec.ny)
    out = np.zeros(com.shape[0], dtype=bool)
    if np.any(ok):
        out[ok] = rmap.bits[ix[ok], iy[ok], k[ok]]
    return out


def contains_bimanual(map_l: ReachabilityMap, map_r: ReachabilityMap,
                      com: Pose2, obj: Pose2) -> bool:
    """Both-hands membership: the intersection of the two hand maps."""
    if map_l.spec != map_r.spec:
        raise ValueError("bimanual query needs maps on the same grid")
    return contains(map_l, com, obj) and contains(map_r, com, obj)


# ---------------------------------------------------------------------------
# Reach oracles
# ---------------------------------------------------------------------------

class ReachOracle:
    """Predicate deciding whether a hand reaches a grasp point.

    The grasp point is given in the CoM frame as planar pose plus
    height.  Subclasses may override reachable_batch for speed.
    """

    def reachable(self, hand: HandSide, x: float, y: float, yaw: float,
                  height: float) -> bool:
        raise NotImplementedError

    def reachable_batch(self, hand: HandSide, xs: np.ndarray, ys: np.ndarray,
                        yaws: np.ndarray, height: float) -> np.ndarray:
        return np.array([self.reachable(hand, float(x), float(y), float(w), height)
                         for x, y, w in zip(xs, ys, yaws)], dtype=bool)


@dataclass(frozen=True)
class AnnulusReachOracle(ReachOracle):
    """Analytic stand-in for whole-body IK reach queries.

    Each hand reaches from a shoulder anchor mirrored across the
    sagittal plane; a grasp point is reachable when it falls inside a
    spherical shell around the anchor and within a forward bearing cone.
    The left/right asymmetry this preserves is what drives regrasping.
    """

    shoulder_forward: float = 0.0
    shoulder_lateral: float = 0.2
    shoulder_height: float = 1.0
    r_min: float = 0.3
    r_max: float = 0.9
    bearing_limit: float = math.radians(75.0)

    def __post_init__(self):
        if not (0.0 < self.r_min < self.r_max):
            raise ValueError("need 0 < r_min < r_max")

    def _anchor_y(self, hand: HandSide) -> float:
        return self.shoulder_lateral if hand is HandSide.LEFT else -self.shoulder_lateral

    def reachable(self, hand, x, y, yaw, height):
        return bool(self.reachable_batch(hand, np.array([x]), np.array([y]),
                                         np.array([yaw]), height)[0])

    def reachable_batch(self, hand, xs, ys, yaws, height):
        dx = np.asarray(xs) - self.shoulder_forward
        dy = np.asarray(ys) - self._anchor_y(hand)
        dz = height - self.shoulder_height
        r2 = dx * dx + dy * dy + dz * dz
        ok = (r2 >= self.r_min ** 2) & (r2 <= self.r_max ** 2)
        bearing = np.abs(np.arctan2(dy, dx))
        return ok & (bearing <= self.bearing_limit)


# ---------------------------------------------------------------------------
# Grasp geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FixedGrasp:
    """Constant object-to-grasp transform (doors, carts, boxes)."""

    offset: Pose2 = Pose2(0.0, 0.0, 0.0)
    height: float = 1.0

    def grasp_at(self, angle: float = 0.0) -> tuple[Pose2, float]:
        return self.offset, self.height


@dataclass(frozen=True)
class RollingGrasp:
    """Handle riding on a circle that turns as the object rolls.

    At rolled angle phi the handle sits handle_radius from the roll axis
    (axis height = rolling_radius), displaced forward along the rolling
    direction and lowered as it comes over the top.
    """

    handle_radius: float
    rolling_radius: float

    def __post_init__(self):
        if self.handle_radius <= 0.0 or self.rolling_radius <= 0.0:
            raise ValueError("radii must be positive")

    def grasp_at(self, angle: float) -> tuple[Pose2, float]:
        planar = Pose2(self.handle_radius * math.sin(angle), 0.0, 0.0)
        height = self.rolling_radius + self.handle_radius * math.cos(angle)
        return planar, height

    def distance_at(self, angle: float) -> float:
        return angle * self.rolling_radius


DEFAULT_ROLLING_ANGLES = tuple(math.radians(a) for a in range(0, 50, 5))


@dataclass(frozen=True)
class RollingMapFamily:
    """Reachability maps indexed by distance rolled since the last regrasp."""

    maps: tuple[ReachabilityMap, ...]
    distances: tuple[float, ...]
    rolling_radius: float

    def __post_init__(self):
        if len(self.maps) != len(self.distances) or not self.maps:
            raise ValueError("need one distance per map")
        d = np.asarray(self.distances)
        if abs(d[0]) > 1e-12 or np.any(np.diff(d) <= 0.0):
            raise ValueError("distances must start at 0 and strictly increase")

    @property
    def max_distance(self) -> float:
        return self.distances[-1]


def select_map(family: RollingMapFamily, d_since_regrasp: float) -> ReachabilityMap:
    """Map whose rolled distance is nearest; ties and overruns clamp down/up."""
    if d_since_regrasp < 0.0:
        raise ValueError("rolled distance must be non-negative")
    d = np.asarray(family.distances)
    return family.maps[int(np.argmin(np.abs(d - d_since_regrasp)))]


# ---------------------------------------------------------------------------
# Map generation
# ---------------------------------------------------------------------------

def generate_map(oracle: ReachOracle, hand: HandSide, grasp,
                 spec: GridSpec, angle: float = 0.0) -> ReachabilityMap:
    """Evaluate the oracle at every cell center.

    A cell is set when the grasp point of the object pose at the cell
    center (expressed in the CoM frame, CoM at identity) is reachable.
    """
    offset, height = grasp.grasp_at(angle)
    ox, oy, oyaw = spec.cell_centers()
    c = np.cos(oyaw)
    s = np.sin(oyaw)
    gx = ox + c * offset.x - s * offset.y
    gy = oy + s * offset.x + c * offset.y
    gyaw = wrap_angles(oyaw + offset.yaw)
    bits = oracle.reachable_batch(hand, gx, gy, gyaw, height)
    return ReachabilityMap(spec, bits.reshape(spec.shape), hand)


def generate_rolling_family(oracle: ReachOracle, hand: HandSide,
                            grasp: RollingGrasp, angles,
                            spec: GridSpec) -> RollingMapFamily:
    """One map per rolled angle; distances follow angle * rolling_radius."""
    angles = list(angles)
    if not angles or abs(angles[0]) > 1e-12:
        raise ValueError("angles must be non-empty and start at 0")
    if any(b <= a for a, b in zip(angles, angles[1:])):
        raise ValueError("angles must be strictly increasing")
    maps = tuple(generate_map(oracle, hand, grasp, spec, angle=a) for a in angles)
    distances = tuple(grasp.distance_at(a) for a in angles)
    return RollingMapFamily(maps, distances, grasp.rolling_radius)


# ---------------------------------------------------------------------------
# Serialization: binary container + textual sidecar
# ---------------------------------------------------------------------------

_MAGIC = b"LMRM"
_VERSION = 1
_HEADER = struct.Struct("<4sI B B d dddd d I d II")


def save_map(rmap: ReachabilityMap, path, distance: float | None = None) -> None:
    spec = rmap.spec
    header = _HEADER.pack(
        _MAGIC, _VERSION,
        0 if rmap.hand is HandSide.LEFT else 1,
        0 if distance is None else 1,
        0.0 if distance is None else float(distance),
        spec.x_range[0], spec.x_range[1], spec.y_range[0], spec.y_range[1],
        spec.xy_resolution, spec.yaw_count, spec.yaw_resolution,
        spec.nx, spec.ny)
    packed = np.packbits(rmap.bits.ravel())
    with open(path, "wb") as f:
        f.write(header)
        f.write(packed.tobytes())
    with open(str(path) + ".meta.txt", "w") as f:
        f.write(f"format locomanip-reachability-map v{_VERSION}\n")
        f.write(f"hand {rmap.hand.value}\n")
        if distance is not None:
            f.write(f"rolled_distance_m {distance:.9g}\n")
        f.write(f"x_range_m {spec.x_range[0]:.9g} {spec.x_range[1]:.9g}\n")
        f.write(f"y_range_m {spec.y_range[0]:.9g} {spec.y_range[1]:.9g}\n")
        f.write(f"xy_resolution_m {spec.xy_resolution:.9g}\n")
        f.write(f"yaw_count {spec.yaw_count}\n")
        f.write(f"yaw_resolution_rad {spec.yaw_resolution:.9g}\n")
        f.write(f"cells_total {rmap.bits.size}\n")
        f.write(f"cells_set {rmap.cell_count()}\n")


def load_map(path) -> tuple[ReachabilityMap, float | None]:
    with open(path, "rb") as f:
        raw = f.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        (magic, version, hand_code, has_d, dist, x0, x1, y0, y1,
         res, yaw_count, yaw_res, nx, ny) = _HEADER.unpack(raw)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a reachability map file")
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        spec = GridSpec((x0, x1), (y0, y1), yaw_count, res, yaw_res)
        if (spec.nx, spec.ny) != (nx, ny):
            raise ValueError(f"{path}: inconsistent grid header")
        n_cells = nx * ny * yaw_count
        packed = np.frombuffer(f.read(), dtype=np.uint8)
        bits = np.unpackbits(packed, count=n_cells).astype(bool).reshape(spec.shape)
    hand = HandSide.LEFT if hand_code == 0 else HandSide.RIGHT
    return ReachabilityMap(spec, bits, hand), (dist if has_d else None)


def save_family(family: RollingMapFamily, stem) -> list[str]:
    """Write one map file per rolled distance plus a manifest."""
    stem = str(stem)
    names = []
    for i, (m, d) in enumerate(zip(family.maps, family.distances)):
        name = f"{stem}_d{i:02d}.rmap"
        save_map(m, name, distance=d)
        names.append(name)
    with open(stem + ".family.txt", "w") as f:
        f.write(f"format locomanip-rolling-family v{_VERSION}\n")
        f.write(f"rolling_radius_m {family.rolling_radius:.9g}\n")
        f.write(f"count {len(names)}\n")
        for name, d in zip(names, family.distances):
            f.write(f"map {d:.9g} {os.path.basename(name)}\n")
    return names


def load_family(stem) -> RollingMapFamily:
    stem = str(stem)
    base = os.path.dirname(stem)
    maps = []
    distances = []
    rolling_radius = None
    with open(stem + ".family.txt") as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "rolling_radius_m":
                rolling_radius = float(parts[1])
            elif parts[0] == "map":
                rmap, _ = load_map(os.path.join(base, parts[2]))
                maps.append(rmap)
                distances.append(float(parts[1]))
    if rolling_radius is None or not maps:
        raise ValueError(f"{stem}.family.txt: incomplete family manifest")
    return RollingMapFamily(tuple(maps), tuple(distances), rolling_radius)


def heatmap_rows(rmap: ReachabilityMap):
    """(x, y, reachable-yaw-cell count) rows for the solvability heatmap."""
    spec = rmap.spec
    counts = rmap.bits.sum(axis=2)
    xs = spec.x_range[0] + (np.arange(spec.nx) + 0.5) * spec.xy_resolution
    ys = spec.y_range[0] + (np.arange(spec.ny) + 0.5) * spec.xy_resolution
    for i in range(spec.nx):
        for j in range(spec.ny):
            yield float(xs[i]), float(ys[j]), int(counts[i, j])


def save_heatmap_csv(rmap: ReachabilityMap, path) -> None:
    with open(path, "w") as f:
        f.write("x,y,reachable_yaw_cells\n")
        for x, y, n in heatmap_rows(rmap):
            f.write(f"{x:.9g},{y:.9g},{n}\n")
