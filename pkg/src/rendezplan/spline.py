"""Corridor-bounded spline paths and trajectory synthesis.

A candidate path is a clamped uniform B-spline through a control polygon:
fixed start, fixed target and n free interior control points.  The search
box of interior point i is sub-interval i of the start-to-target extent on
each axis, so candidates progress monotonically through an axis-aligned
corridor.

Trajectory synthesis walks the sampled curve segment by segment: the
vehicle moves at constant water speed along the segment direction, the
local current (piecewise constant per segment, sampled at the segment
start) adds vectorially, and the traversal time of a segment is its length
divided by the along-track ground speed.  A segment whose along-track
ground speed falls to ``min_progress_speed`` or below cannot be traversed;
the trajectory is then flagged infeasible and its final time is +inf.

Angle conventions: x north, y east, z down; yaw is measured from +x toward
+y, pitch is positive nose-up (negative when z increases along the path).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import BSpline

from .currents import CurrentField, UniformCurrent, velocity_3d_batch
from .errors import ConfigError

__all__ = [
    "ControlPolygon",
    "CorridorBounds",
    "Trajectory",
    "VehicleState",
    "corridor_bounds",
    "random_polygon",
    "design_matrix",
    "sample_curve",
    "heading_profile",
    "synthesize_trajectory",
    "state_at",
    "wrap_angle",
    "trajectory_to_csv",
    "polygon_to_json",
    "polygon_from_json",
]

DEFAULT_DEGREE = 3
DEFAULT_SAMPLES = 100
MIN_PROGRESS_SPEED = 0.1


@dataclass(eq=False)
class ControlPolygon:
    """Spline control points: fixed endpoints plus n >= 1 free interior points."""

    start: np.ndarray
    interior: np.ndarray
    target: np.ndarray

    def __post_init__(self) -> None:
        self.start = np.asarray(self.start, dtype=float)
        self.target = np.asarray(self.target, dtype=float)
        self.interior = np.atleast_2d(np.asarray(self.interior, dtype=float))
        if self.start.shape != (3,) or self.target.shape != (3,):
            raise ConfigError("start and target must be 3-vectors")
        if self.interior.ndim != 2 or self.interior.shape[1] != 3 or len(self.interior) < 1:
            raise ConfigError("interior must be an (n, 3) array with n >= 1")

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    def control_points(self) -> np.ndarray:
        return np.vstack([self.start, self.interior, self.target])

    def as_vector(self) -> np.ndarray:
        return self.interior.ravel().copy()


@dataclass(eq=False)
class CorridorBounds:
    """Per-interior-point axis-aligned search boxes, lower <= upper."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        self.lower = np.atleast_2d(np.asarray(self.lower, dtype=float))
        self.upper = np.atleast_2d(np.asarray(self.upper, dtype=float))
        if self.lower.shape != self.upper.shape or self.lower.shape[1] != 3:
            raise ConfigError("bounds must be matching (n, 3) arrays")
        if (self.lower > self.upper).any():
            raise ConfigError("lower bound exceeds upper bound")

    @property
    def n_interior(self) -> int:
        return len(self.lower)

    def flat(self) -> tuple[np.ndarray, np.ndarray]:
        return self.lower.ravel(), self.upper.ravel()


@dataclass
class VehicleState:
    """Kinematic state snapshot; roll and its rates are identically zero."""

    position: np.ndarray
    psi: float = 0.0
    theta: float = 0.0
    phi: float = 0.0
    u: float = 0.0
    v: float = 0.0
    w: float = 0.0
    p: float = 0.0
    q: float = 0.0
    r: float = 0.0

    def __post_init__(self) -> None:
        self.position = np.asarray(self.position, dtype=float)


@dataclass(eq=False)
class Trajectory:
    """Sampled flight plan.

    times are cumulative seconds from 0; for feasible non-degenerate paths
    they increase strictly.  Sample i carries the state of the segment it
    starts (the last sample repeats the final segment).  ``velocities`` are
    ground-frame (north, east, down) components.  Infeasible plans keep
    their geometry but have t_f = +inf.
    """

    times: np.ndarray
    positions: np.ndarray
    psi: np.ndarray
    theta: np.ndarray
    r: np.ndarray
    velocities: np.ndarray
    t_f: float
    length: float
    infeasible: bool = False


def wrap_angle(a):
    """Wrap angles to (-pi, pi]."""
    wrapped = np.mod(np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(wrapped == -np.pi, np.pi, wrapped)


def corridor_bounds(start: np.ndarray, target: np.ndarray, n: int) -> CorridorBounds:
    """Split the start-to-target extent into n per-point boxes.

    Axis k of interior point i spans sub-interval i of the n equal
    sub-intervals between start[k] and target[k], orientation-normalized so
    lower <= upper even when the axis runs backwards.  Axes with equal
    endpoints give degenerate (zero-width) intervals.
    """
    if n < 1:
        raise ConfigError(f"need at least one interior point, got {n}")
    start = np.asarray(start, dtype=float)
    target = np.asarray(target, dtype=float)
    ends = start[None, :] + (target - start)[None, :] * (np.arange(n + 1) / n)[:, None]
    lower = np.minimum(ends[:-1], ends[1:])
    upper = np.maximum(ends[:-1], ends[1:])
    return CorridorBounds(lower=lower, upper=upper)


def random_polygon(
    start: np.ndarray,
    target: np.ndarray,
    bounds: CorridorBounds,
    rng: np.random.Generator,
) -> ControlPolygon:
    """Draw each interior coordinate uniformly inside its corridor box."""
    interior = bounds.lower + rng.random(bounds.lower.shape) * (bounds.upper - bounds.lower)
    return ControlPolygon(start=start, interior=interior, target=target)


@lru_cache(maxsize=64)
def _design_matrix_cached(n_ctrl: int, m: int, degree: int) -> np.ndarray:
    k = min(degree, n_ctrl - 1)
    n_internal = n_ctrl - k - 1
    internal = np.linspace(0.0, 1.0, n_internal + 2)[1:-1]
    knots = np.concatenate([np.zeros(k + 1), internal, np.ones(k + 1)])
    u = np.linspace(0.0, 1.0, m)
    B = BSpline.design_matrix(u, knots, k).toarray()
    B.setflags(write=False)
    return B


def design_matrix(n_ctrl: int, m: int, degree: int = DEFAULT_DEGREE) -> np.ndarray:
    """(m, n_ctrl) clamped uniform B-spline basis at m uniform parameters.

    The effective degree drops to n_ctrl - 1 when there are too few control
    points for the requested degree, never below zero and never an error.
    The matrix is cached and read-only.
    """
    if n_ctrl < 2:
        raise ConfigError("need at least two control points")
    if m < 2:
        raise ConfigError("need at least two samples")
    if degree < 1:
        raise ConfigError("degree must be >= 1")
    return _design_matrix_cached(int(n_ctrl), int(m), int(degree))


def sample_curve(
    polygon: ControlPolygon, m: int = DEFAULT_SAMPLES, degree: int = DEFAULT_DEGREE
) -> np.ndarray:
    """Evaluate the spline at m uniform parameters; endpoints interpolate."""
    ctrl = polygon.control_points()
    return design_matrix(len(ctrl), m, degree) @ ctrl


def heading_profile(
    points: np.ndarray, segment_times: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-segment yaw, pitch and yaw rate along a polyline.

    Yaw is atan2(dy, dx); pitch is atan2(-dz, horizontal distance).  The yaw
    rate of segment i is the wrapped yaw change from segment i-1 divided by
    the traversal time of segment i (unit times when segment_times is None);
    the first segment has rate 0.  Zero-length segments reuse the previous
    segment's angles (0 at the start) and contribute zero rate.
    """
    points = np.asarray(points, dtype=float)
    d = np.diff(points, axis=0)
    k = len(d)
    if k < 1:
        raise ConfigError("need at least two points")
    seg_len = np.linalg.norm(d, axis=1)
    psi = np.zeros(k)
    theta = np.zeros(k)
    for i in range(k):
        if seg_len[i] == 0.0:
            psi[i] = psi[i - 1] if i > 0 else 0.0
            theta[i] = theta[i - 1] if i > 0 else 0.0
        else:
            psi[i] = np.arctan2(d[i, 1], d[i, 0])
            theta[i] = np.arctan2(-d[i, 2], np.hypot(d[i, 0], d[i, 1]))
    if segment_times is None:
        h = np.ones(k)
    else:
        h = np.asarray(segment_times, dtype=float)
        if h.shape != (k,):
            raise ConfigError("segment_times must have one entry per segment")
    r = np.zeros(k)
    dpsi = wrap_angle(psi[1:] - psi[:-1])
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = dpsi / h[1:]
    r[1:] = np.where(np.isfinite(rate), rate, 0.0)
    return psi, theta, r


def _sample_current(current, pts: np.ndarray) -> np.ndarray:
    if current is None:
        return np.zeros_like(pts)
    if isinstance(current, UniformCurrent):
        return np.broadcast_to(current.components, pts.shape).copy()
    return velocity_3d_batch(current, pts)


def synthesize_trajectory(
    polygon: ControlPolygon,
    current: CurrentField | UniformCurrent | None,
    water_speed: float,
    m: int = DEFAULT_SAMPLES,
    degree: int = DEFAULT_DEGREE,
    min_progress_speed: float = MIN_PROGRESS_SPEED,
) -> Trajectory:
    """Time-parameterize the spline path against the current field.

    Ground velocity on a segment is water_speed along the segment direction
    plus the current sampled at the segment start.  Segments whose
    along-track ground speed is at or below min_progress_speed mark the
    whole trajectory infeasible (t_f = +inf); zero-length segments take
    zero time and never block.
    """
    if water_speed <= 0.0:
        raise ConfigError(f"water_speed must be positive, got {water_speed}")
    pts = sample_curve(polygon, m, degree)
    d = np.diff(pts, axis=0)
    seg_len = np.linalg.norm(d, axis=1)
    nonzero = seg_len > 0.0
    e = np.zeros_like(d)
    e[nonzero] = d[nonzero] / seg_len[nonzero, None]

    c = _sample_current(current, pts[:-1])
    ground = water_speed * e + c
    along = water_speed + (c * e).sum(axis=1)

    blocked = nonzero & (along <= min_progress_speed)
    seg_time = np.zeros(len(d))
    open_seg = nonzero & ~blocked
    seg_time[open_seg] = seg_len[open_seg] / along[open_seg]
    seg_time[blocked] = np.inf

    psi, theta, r = heading_profile(pts, segment_times=seg_time)
    times = np.concatenate([[0.0], np.cumsum(seg_time)])

    idx = np.minimum(np.arange(m), len(d) - 1)  # last sample repeats last segment
    return Trajectory(
        times=times,
        positions=pts,
        psi=psi[idx],
        theta=theta[idx],
        r=r[idx],
        velocities=ground[idx],
        t_f=float(times[-1]),
        length=float(seg_len.sum()),
        infeasible=bool(blocked.any()),
    )


def state_at(traj: Trajectory, t: float) -> VehicleState:
    """Interpolated vehicle state at plan-relative time t.

    Position interpolates linearly inside the containing segment; angles,
    rates and velocity come from that segment.  t clamps to the sampled
    range, skipping any infinite tail.
    """
    times = traj.times
    finite = np.isfinite(times)
    last = int(np.nonzero(finite)[0][-1])
    t = float(np.clip(t, times[0], times[last]))
    i = int(np.searchsorted(times[: last + 1], t, side="right") - 1)
    i = min(max(i, 0), last - 1) if last > 0 else 0
    span = times[i + 1] - times[i]
    frac = 0.0 if not np.isfinite(span) or span <= 0.0 else (t - times[i]) / span
    pos = traj.positions[i] + frac * (traj.positions[i + 1] - traj.positions[i])
    vel = traj.velocities[i]
    return VehicleState(
        position=pos,
        psi=float(traj.psi[i]),
        theta=float(traj.theta[i]),
        u=float(vel[0]),
        v=float(vel[1]),
        w=float(vel[2]),
        r=float(traj.r[i]),
    )


# ---------------------------------------------------------------------------
# I/O


def trajectory_to_csv(traj: Trajectory, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("t,x,y,z,psi,theta,r,u,v,w\n")
        for i in range(len(traj.times)):
            row = [
                traj.times[i],
                *traj.positions[i],
                traj.psi[i],
                traj.theta[i],
                traj.r[i],
                *traj.velocities[i],
            ]
            fh.write(",".join(f"{val:.9g}" for val in row) + "\n")


def polygon_to_json(polygon: ControlPolygon) -> dict:
    return {
        "start": polygon.start.tolist(),
        "interior": polygon.interior.tolist(),
        "target": polygon.target.tolist(),
    }


def polygon_from_json(doc: dict) -> ControlPolygon:
    try:
        return ControlPolygon(
            start=np.array(doc["start"], dtype=float),
            interior=np.array(doc["interior"], dtype=float),
            target=np.array(doc["target"], dtype=float),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed polygon JSON: {exc}") from None


def save_polygon_json(polygon: ControlPolygon, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(polygon_to_json(polygon), fh)
