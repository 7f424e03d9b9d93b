"""Population-wide objective evaluation for spline search.

The search optimizers score hundreds of candidate control polygons per
iteration.  Doing that through the scalar pipeline (one spline synthesis and
one cost call per candidate) is dominated by Python overhead, so this module
bakes the whole pipeline into array operations over a (population, 3n)
matrix of flattened interior control points: one basis matmul for all curve
samples, one banded current query for all segment starts, then per-candidate
reductions for every penalty term.

``ObjectiveContext.evaluate`` keeps the scalar path (used for spot checks
and warm starts); ``evaluate_batch`` must agree with it to float precision,
which tests enforce.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cost import (
    FEASIBLE_TOL,
    INFEASIBLE_PENALTY,
    CostBreakdown,
    PenaltyWeights,
    RendezvousSpec,
    VehicleLimits,
    evaluate as evaluate_cost,
)
from .currents import UniformCurrent, velocity_3d_batch
from .envmap import distances_to_forbidden, feasible_mask
from .environment import EnvironmentSnapshot
from .errors import ConfigError
from .obstacles import clearances
from .spline import (
    DEFAULT_DEGREE,
    DEFAULT_SAMPLES,
    MIN_PROGRESS_SPEED,
    ControlPolygon,
    CorridorBounds,
    Trajectory,
    corridor_bounds,
    design_matrix,
    synthesize_trajectory,
    wrap_angle,
)

__all__ = ["ObjectiveContext", "build_objective"]


@dataclass(eq=False)
class ObjectiveContext:
    """Everything needed to score a flattened control-point vector."""

    env: EnvironmentSnapshot
    spec: RendezvousSpec
    limits: VehicleLimits
    weights: PenaltyWeights
    bounds: CorridorBounds
    water_speed: float
    m: int = DEFAULT_SAMPLES
    degree: int = DEFAULT_DEGREE
    min_progress_speed: float = MIN_PROGRESS_SPEED

    def __post_init__(self) -> None:
        if self.water_speed <= 0:
            raise ConfigError("water_speed must be positive")
        if self.m < 2:
            raise ConfigError("need at least two curve samples")

    @property
    def n_interior(self) -> int:
        return self.bounds.n_interior

    @property
    def dim(self) -> int:
        return 3 * self.bounds.n_interior

    def flat_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.bounds.flat()

    def polygon(self, vec: np.ndarray) -> ControlPolygon:
        interior = np.asarray(vec, dtype=float).reshape(self.n_interior, 3)
        return ControlPolygon(start=self.spec.start, interior=interior, target=self.spec.target)

    def trajectory(self, vec: np.ndarray) -> Trajectory:
        return synthesize_trajectory(
            self.polygon(vec),
            self.env.current,
            self.water_speed,
            m=self.m,
            degree=self.degree,
            min_progress_speed=self.min_progress_speed,
        )

    def evaluate(self, vec: np.ndarray) -> CostBreakdown:
        """Scalar reference path: synthesize the trajectory, then score it."""
        return evaluate_cost(self.trajectory(vec), self.env, self.limits, self.spec, self.weights)

    def evaluate_batch(self, pop: np.ndarray) -> tuple[np.ndarray, list[CostBreakdown]]:
        """Score a (P, 3n) population; returns totals plus full breakdowns."""
        pop = np.asarray(pop, dtype=float)
        if pop.ndim != 2 or pop.shape[1] != self.dim:
            raise ConfigError(f"population must be (P, {self.dim})")
        n_pop = len(pop)
        n = self.n_interior

        ctrl = np.empty((n_pop, n + 2, 3))
        ctrl[:, 0] = self.spec.start
        ctrl[:, 1:-1] = pop.reshape(n_pop, n, 3)
        ctrl[:, -1] = self.spec.target
        pts = np.matmul(design_matrix(n + 2, self.m, self.degree), ctrl)

        d = np.diff(pts, axis=1)
        seg_len = np.linalg.norm(d, axis=2)
        nonzero = seg_len > 0.0
        e = np.zeros_like(d)
        np.divide(d, seg_len[..., None], out=e, where=nonzero[..., None])

        c = self._currents(pts[:, :-1, :].reshape(-1, 3)).reshape(n_pop, self.m - 1, 3)
        ground = self.water_speed * e + c
        along = self.water_speed + (c * e).sum(axis=2)

        blocked = nonzero & (along <= self.min_progress_speed)
        seg_time = np.zeros_like(seg_len)
        open_seg = nonzero & ~blocked
        seg_time[open_seg] = seg_len[open_seg] / along[open_seg]
        seg_time[blocked] = np.inf
        t_f = np.cumsum(seg_time, axis=1)[:, -1]
        blocked_any = blocked.any(axis=1)

        psi, theta, r = self._heading(d, seg_len, nonzero, seg_time)

        idx = np.minimum(np.arange(self.m), self.m - 2)
        psi_s, theta_s, r_s, ground_s = psi[:, idx], theta[:, idx], r[:, idx], ground[:, idx, :]

        u_max, v_max = self.limits.u_max, self.limits.v_max
        cps, sps = np.cos(psi_s), np.sin(psi_s)
        cth, sth = np.cos(theta_s), np.sin(theta_s)
        gu, gv, gw = ground_s[..., 0], ground_s[..., 1], ground_s[..., 2]
        u = gu * cth * cps + gv * cth * sps - gw * sth
        v = -gu * sps + gv * cps
        t1 = ((np.maximum(0.0, np.abs(u) - u_max) / u_max) ** 2).max(axis=1)
        t2 = ((np.maximum(0.0, np.abs(v) - v_max) / v_max) ** 2).max(axis=1)
        lim_t, lim_r = self.limits.theta_max, self.limits.r_max
        t3 = ((np.maximum(0.0, np.abs(theta_s) - lim_t) / lim_t) ** 2).max(axis=1)
        t4 = ((np.maximum(0.0, np.abs(r_s) - lim_r) / lim_r) ** 2).max(axis=1)

        flat_pts = pts.reshape(-1, 3)
        d_map = distances_to_forbidden(self.env.grid, flat_pts[:, :2])
        d_map = np.where(feasible_mask(self.env.grid, flat_pts), d_map, 0.0)
        d_all = np.minimum(d_map, clearances(self.env.obstacles, flat_pts))
        worst = d_all.reshape(n_pop, self.m).min(axis=1)
        thr = self.spec.clearance_threshold
        t6 = (np.maximum(0.0, thr - worst) / thr) ** 2

        miss = np.linalg.norm(pts[:, -1, :] - self.spec.target, axis=1)
        t7 = (miss / max(float(np.linalg.norm(self.spec.target)), 1.0)) ** 2

        t_r, eps = self.spec.rendezvous_time, self.spec.time_tolerance
        dtf = np.where(blocked_any, 0.0, t_f - t_r)
        pi = (dtf / t_r) ** 2
        t5 = (np.maximum(0.0, np.abs(dtf) - eps) / eps) ** 2

        terms = np.stack([t1, t2, t3, t4, t5, t6, t7], axis=1)
        totals = pi + terms @ self.weights.as_array()
        totals = totals + np.where(blocked_any, INFEASIBLE_PENALTY, 0.0)
        feas = ~blocked_any & (terms <= FEASIBLE_TOL).all(axis=1)

        breakdowns = [
            CostBreakdown(
                pi_term=float(pi[i]),
                terms=tuple(terms[i]),
                total=float(totals[i]),
                feasible=bool(feas[i]),
            )
            for i in range(n_pop)
        ]
        return totals, breakdowns

    def _currents(self, pts: np.ndarray) -> np.ndarray:
        cur = self.env.current
        if cur is None:
            return np.zeros_like(pts)
        if isinstance(cur, UniformCurrent):
            return np.broadcast_to(cur.components, pts.shape).copy()
        return velocity_3d_batch(cur, pts)

    @staticmethod
    def _heading(d, seg_len, nonzero, seg_time):
        """Vectorized twin of the per-polyline heading profile."""
        n_pop, k = seg_len.shape
        psi_raw = np.arctan2(d[..., 1], d[..., 0])
        theta_raw = np.arctan2(-d[..., 2], np.hypot(d[..., 0], d[..., 1]))
        # carry the previous segment's angles across zero-length segments
        take = np.where(nonzero, np.arange(k)[None, :], -1)
        last = np.maximum.accumulate(take, axis=1)
        rows = np.arange(n_pop)[:, None]
        safe = np.maximum(last, 0)
        psi = np.where(last >= 0, psi_raw[rows, safe], 0.0)
        theta = np.where(last >= 0, theta_raw[rows, safe], 0.0)
        r = np.zeros_like(psi)
        dpsi = wrap_angle(psi[:, 1:] - psi[:, :-1])
        with np.errstate(divide="ignore", invalid="ignore"):
            rate = dpsi / seg_time[:, 1:]
        r[:, 1:] = np.where(np.isfinite(rate), rate, 0.0)
        return psi, theta, r


def build_objective(
    env: EnvironmentSnapshot,
    spec: RendezvousSpec,
    limits: VehicleLimits | None = None,
    weights: PenaltyWeights | None = None,
    n_interior: int = 7,
    water_speed: float = 2.5,
    m: int = DEFAULT_SAMPLES,
    degree: int = DEFAULT_DEGREE,
    bounds: CorridorBounds | None = None,
) -> ObjectiveContext:
    """Assemble an objective over start-to-target corridor boxes."""
    if bounds is None:
        bounds = corridor_bounds(spec.start, spec.target, n_interior)
    return ObjectiveContext(
        env=env,
        spec=spec,
        limits=limits if limits is not None else VehicleLimits(),
        weights=weights if weights is not None else PenaltyWeights(),
        bounds=bounds,
        water_speed=water_speed,
        m=m,
        degree=degree,
    )
