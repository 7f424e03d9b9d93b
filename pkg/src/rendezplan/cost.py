"""Penalty-based trajectory cost and hard feasibility checks.

The scalar objective is a rendezvous-timing term plus seven weighted
penalty terms, each a scaled squared constraint violation:

1. surge bound          max over samples of ((|u| - u_max)+ / u_max)^2
2. sway bound           same for v
3. pitch bound          same for pitch angle
4. yaw-rate bound       same for yaw rate
5. arrival window       ((|t_f - T_r| - eps)+ / eps)^2
6. clearance shortfall  ((threshold - D)+ / threshold)^2 with D the worst
   sample's distance to land or to an obstacle confidence sphere
7. terminal miss        (|end - target| / max(|target|, 1))^2

Trajectories flagged infeasible (no forward progress on some segment) get a
fixed 1e6 added instead of their unbounded time terms, so every
geometrically valid candidate dominates them while relative ordering among
blocked candidates still reflects geometry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .envmap import distances_to_forbidden, feasible_mask
from .environment import EnvironmentSnapshot
from .errors import ConfigError
from .obstacles import clearances
from .spline import Trajectory

__all__ = [
    "VehicleLimits",
    "RendezvousSpec",
    "PenaltyWeights",
    "CostBreakdown",
    "FeasibilityReport",
    "Violation",
    "evaluate",
    "check_feasible",
    "sample_distances",
    "body_velocities",
    "FEASIBLE_TOL",
    "INFEASIBLE_PENALTY",
]

FEASIBLE_TOL = 1e-12
INFEASIBLE_PENALTY = 1.0e6
_BOUNDARY_TOL = 1e-6


@dataclass(frozen=True)
class VehicleLimits:
    """Hard state bounds; all strictly positive."""

    u_max: float = 2.6
    v_max: float = 0.5
    theta_max: float = 0.6
    r_max: float = 0.3

    def __post_init__(self) -> None:
        if min(self.u_max, self.v_max, self.theta_max, self.r_max) <= 0:
            raise ConfigError("vehicle limits must be positive")


@dataclass(eq=False)
class RendezvousSpec:
    """Rendezvous contract: where, when and how exactly.

    rendezvous_time is the requested arrival time, time_tolerance the
    admissible absolute deviation, clearance_threshold the minimum stand-off
    from land and obstacle confidence spheres.
    """

    start: np.ndarray
    target: np.ndarray
    rendezvous_time: float
    time_tolerance: float
    clearance_threshold: float

    def __post_init__(self) -> None:
        self.start = np.asarray(self.start, dtype=float)
        self.target = np.asarray(self.target, dtype=float)
        if self.start.shape != (3,) or self.target.shape != (3,):
            raise ConfigError("start and target must be 3-vectors")
        if self.rendezvous_time <= 0 or self.time_tolerance <= 0 or self.clearance_threshold <= 0:
            raise ConfigError("times and clearance threshold must be positive")


@dataclass(frozen=True)
class PenaltyWeights:
    surge: float = 10.0
    sway: float = 10.0
    pitch: float = 10.0
    yaw_rate: float = 10.0
    window: float = 10.0
    collision: float = 100.0
    terminal: float = 10.0

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.surge, self.sway, self.pitch, self.yaw_rate,
             self.window, self.collision, self.terminal]
        )


@dataclass(frozen=True)
class CostBreakdown:
    """Objective value with its unweighted penalty terms.

    total = pi_term + weights . terms (+ the fixed penalty when the
    trajectory cannot make progress); feasible means every term is zero
    within FEASIBLE_TOL and the trajectory is traversable.
    """

    pi_term: float
    terms: tuple[float, float, float, float, float, float, float]
    total: float
    feasible: bool

    @property
    def collision_term(self) -> float:
        return self.terms[5]

    @classmethod
    def from_total(cls, total: float) -> "CostBreakdown":
        """Wrap a bare scalar objective; used by optimizer test functions."""
        return cls(pi_term=float(total), terms=(0.0,) * 7, total=float(total), feasible=False)

    def to_json(self) -> dict:
        return {
            "pi_term": self.pi_term,
            "terms": list(self.terms),
            "total": self.total,
            "feasible": self.feasible,
        }

    def csv_row(self) -> str:
        return ",".join(
            [f"{self.pi_term:.9g}"]
            + [f"{t:.9g}" for t in self.terms]
            + [f"{self.total:.9g}", str(int(self.feasible))]
        )


@dataclass(frozen=True)
class Violation:
    clause: str
    worst_index: int
    value: float
    limit: float


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    violations: tuple[Violation, ...]

    def clauses(self) -> tuple[str, ...]:
        return tuple(v.clause for v in self.violations)

    def to_json(self) -> dict:
        return {
            "feasible": self.feasible,
            "violations": [v.__dict__ for v in self.violations],
        }


def excess_sq(values: np.ndarray, limit: float) -> np.ndarray:
    """Scaled squared excess of |values| over a positive limit."""
    return (np.maximum(0.0, np.abs(values) - limit) / limit) ** 2


def shortfall_sq(distance, threshold: float):
    """Scaled squared shortfall of a distance below a positive threshold."""
    return (np.maximum(0.0, threshold - np.asarray(distance, dtype=float)) / threshold) ** 2


def sample_distances(positions: np.ndarray, env: EnvironmentSnapshot) -> np.ndarray:
    """Per-sample distance to the nearest hazard (land or confidence sphere).

    Samples that are outside the operating area, below the surface bound or
    inside a land cell count as distance zero.
    """
    d_map = distances_to_forbidden(env.grid, positions[:, :2])
    d_map = np.where(feasible_mask(env.grid, positions), d_map, 0.0)
    return np.minimum(d_map, clearances(env.obstacles, positions))


def body_velocities(traj: Trajectory) -> np.ndarray:
    """Rotate ground-frame sample velocities into the body frame (zero roll).

    Column 0 is the along-track (surge) speed, column 1 the lateral slip,
    column 2 the heave seen by the hull.
    """
    cps, sps = np.cos(traj.psi), np.sin(traj.psi)
    cth, sth = np.cos(traj.theta), np.sin(traj.theta)
    g = traj.velocities
    u = g[:, 0] * cth * cps + g[:, 1] * cth * sps - g[:, 2] * sth
    v = -g[:, 0] * sps + g[:, 1] * cps
    w = g[:, 0] * sth * cps + g[:, 1] * sth * sps + g[:, 2] * cth
    return np.stack([u, v, w], axis=1)


def evaluate(
    traj: Trajectory,
    env: EnvironmentSnapshot,
    limits: VehicleLimits,
    spec: RendezvousSpec,
    weights: PenaltyWeights = PenaltyWeights(),
) -> CostBreakdown:
    """Score one trajectory against the rendezvous contract."""
    body = body_velocities(traj)
    t1 = float(excess_sq(body[:, 0], limits.u_max).max())
    t2 = float(excess_sq(body[:, 1], limits.v_max).max())
    t3 = float(excess_sq(traj.theta, limits.theta_max).max())
    t4 = float(excess_sq(traj.r, limits.r_max).max())

    worst = float(sample_distances(traj.positions, env).min())
    t6 = float(shortfall_sq(worst, spec.clearance_threshold))

    miss = np.linalg.norm(traj.positions[-1] - spec.target)
    t7 = float((miss / max(np.linalg.norm(spec.target), 1.0)) ** 2)

    if traj.infeasible:
        pi = 0.0
        t5 = 0.0
    else:
        dt = traj.t_f - spec.rendezvous_time
        pi = float((dt / spec.rendezvous_time) ** 2)
        t5 = float(
            (max(0.0, abs(dt) - spec.time_tolerance) / spec.time_tolerance) ** 2
        )

    terms = (t1, t2, t3, t4, t5, t6, t7)
    total = pi + float(weights.as_array() @ np.array(terms))
    if traj.infeasible:
        total += INFEASIBLE_PENALTY
    feasible = (not traj.infeasible) and all(t <= FEASIBLE_TOL for t in terms)
    return CostBreakdown(pi_term=pi, terms=terms, total=total, feasible=feasible)


def check_feasible(
    traj: Trajectory,
    env: EnvironmentSnapshot,
    limits: VehicleLimits,
    spec: RendezvousSpec,
) -> FeasibilityReport:
    """Hard constraint check with a per-clause violation report.

    Clauses: start_boundary, end_boundary, progress, clearance, the four
    state bounds, and the (strict) time_window.  Each violation names the
    worst offending sample.
    """
    violations: list[Violation] = []

    start_miss = float(np.linalg.norm(traj.positions[0] - spec.start))
    if start_miss > _BOUNDARY_TOL:
        violations.append(Violation("start_boundary", 0, start_miss, _BOUNDARY_TOL))
    end_miss = float(np.linalg.norm(traj.positions[-1] - spec.target))
    if end_miss > _BOUNDARY_TOL:
        violations.append(
            Violation("end_boundary", len(traj.positions) - 1, end_miss, _BOUNDARY_TOL)
        )

    if traj.infeasible:
        seg_times = np.diff(traj.times)
        first_blocked = int(np.nonzero(~np.isfinite(seg_times))[0][0])
        violations.append(Violation("progress", first_blocked, float("inf"), 0.0))

    d = sample_distances(traj.positions, env)
    worst = int(np.argmin(d))
    if d[worst] < spec.clearance_threshold:
        violations.append(
            Violation("clearance", worst, float(d[worst]), spec.clearance_threshold)
        )

    body = body_velocities(traj)
    for clause, values, limit in [
        ("surge_limit", body[:, 0], limits.u_max),
        ("sway_limit", body[:, 1], limits.v_max),
        ("pitch_limit", traj.theta, limits.theta_max),
        ("yaw_rate_limit", traj.r, limits.r_max),
    ]:
        worst = int(np.argmax(np.abs(values)))
        if abs(values[worst]) > limit:
            violations.append(Violation(clause, worst, float(abs(values[worst])), limit))

    dt = abs(traj.t_f - spec.rendezvous_time)
    if not dt < spec.time_tolerance:  # strict window, so inf and NaN both fail
        violations.append(
            Violation("time_window", len(traj.positions) - 1, float(dt), spec.time_tolerance)
        )

    return FeasibilityReport(feasible=not violations, violations=tuple(violations))


def breakdown_to_json_str(b: CostBreakdown) -> str:
    return json.dumps(b.to_json())
