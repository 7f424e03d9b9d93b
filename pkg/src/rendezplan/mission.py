"""Online rendezvous mission loop: plan, fly, sense, warm-start replan.

The follower receives one rendezvous message at t=0, plans an initial
trajectory, and either cancels (infeasible) or flies.  While flying it
re-plans whenever

* (a) the environment updated (current field evolved, obstacles stepped),
* (b) a sensed obstacle's confidence sphere intersects the remaining path,
* (c) the freshly adopted plan's predicted arrival drifts past half the
  rendezvous tolerance (checked once per adoption, triggering one retry).

Planning always works from what the vehicle can know: the full chart and
current field, but only obstacles whose centers have come within
``sensor_range`` of the vehicle at some point (visibility latches on).
Replans keep the surviving tail of the previous best control polygon and
seed it verbatim into the optimizer population; the remaining time budget
shrinks to the time left until the requested rendezvous.

The simulator advances in fixed steps, follows each trajectory exactly
(autopilot tracking error out of scope), and treats replanning as
instantaneous in sim time: the vehicle flies the stale plan during the
optimizer call.  Every environment state is kept so the flown track can be
re-checked densely afterwards (:func:`verify_flown_path`).
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .cost import (
    FeasibilityReport,
    PenaltyWeights,
    RendezvousSpec,
    VehicleLimits,
    check_feasible,
)
from .currents import evolve
from .envmap import distances_to_forbidden, feasible_mask
from .environment import EnvironmentSnapshot
from .errors import ConfigError
from .objective import ObjectiveContext, build_objective
from .obstacles import ObstacleSet, clearances, step_set
from .optimizers import ALGORITHMS, OptimizerRun, default_config, optimize
from .seeding import TAG_MISSION, substream
from .spline import ControlPolygon, Trajectory, VehicleState, state_at

OUTCOME_RENDEZVOUS = "rendezvous"
OUTCOME_FAILED = "failed"
OUTCOME_CANCEL = "cancel"

FLOWN_HEADER = "t,x,y,z,psi,theta,r,u,v,w"


@dataclass(frozen=True)
class RendezvousMessage:
    """What the leader transmits: where to be, facing which way, and when."""

    position: np.ndarray
    course: float
    depth: float
    rendezvous_time: float

    def __post_init__(self) -> None:
        position = np.asarray(self.position, dtype=float)
        if position.shape != (3,):
            raise ConfigError("rendezvous position must be a 3-vector")
        object.__setattr__(self, "position", position)
        if self.rendezvous_time <= 0.0:
            raise ConfigError("rendezvous_time must lie in the mission's future")
        if abs(position[2] - self.depth) > 1e-9:
            raise ConfigError("message depth must match position[2]")


@dataclass(eq=False)
class PlanRecord:
    """One adopted plan: why it was made, when, and what came out."""

    trigger: str
    time: float
    run: OptimizerRun
    trajectory: Trajectory
    visible: tuple[int, ...] = ()

    @property
    def predicted_arrival(self) -> float:
        return self.time + self.trajectory.t_f


@dataclass(eq=False)
class PlanOutcome:
    """Initial-plan result: proceed or cancel, with the evidence."""

    proceed: bool
    run: OptimizerRun
    trajectory: Trajectory
    report: FeasibilityReport


@dataclass(eq=False)
class MissionLog:
    """Everything one mission produced, enough to replay and audit it."""

    scenario: str
    algorithm: str
    seed: int
    outcome: str
    reason: str
    plans: list[PlanRecord]
    flown: np.ndarray
    achieved_t_f: float
    events: list[str]
    snapshots: list[EnvironmentSnapshot]
    cancel_report: FeasibilityReport | None = None
    target_time: float = 0.0
    time_tolerance: float = 0.0

    def to_json(self) -> dict:
        plans = [
            {
                "trigger": p.trigger,
                "time": p.time,
                "n_interior": int(p.run.best_vector.size // 3),
                "iterations": p.run.iterations_used,
                "evaluations": p.run.evaluations,
                "best_total": p.run.best_cost.total,
                "collision_violation": p.run.history_collision[-1],
                "t_f": p.trajectory.t_f if math.isfinite(p.trajectory.t_f) else None,
                "predicted_arrival": (
                    p.predicted_arrival if math.isfinite(p.predicted_arrival) else None
                ),
                "visible_obstacles": list(p.visible),
            }
            for p in self.plans
        ]
        return {
            "schema": 1,
            "scenario": self.scenario,
            "algorithm": self.algorithm,
            "seed": self.seed,
            "outcome": self.outcome,
            "reason": self.reason,
            "achieved_t_f": self.achieved_t_f if math.isfinite(self.achieved_t_f) else None,
            "target_time": self.target_time,
            "time_tolerance": self.time_tolerance,
            "n_plans": len(self.plans),
            "n_field_updates": max(len(self.snapshots) - 1, 0),
            "flown_samples": int(self.flown.shape[0]),
            "plans": plans,
            "events": list(self.events),
        }

    def flown_csv(self) -> str:
        lines = [FLOWN_HEADER]
        for row in self.flown:
            lines.append(",".join(f"{v:.9g}" for v in row))
        return "\n".join(lines) + "\n"

    def event_log(self) -> str:
        return "\n".join(self.events) + "\n"


@dataclass(frozen=True)
class FlightCheck:
    """Dense post-hoc sweep of the flown track against the true world."""

    samples: int
    incursions: int
    min_clearance: float


# ---------------------------------------------------------------------------
# Planning operations


def _plan_seed(seed: int, index: int) -> int:
    """Independent optimizer seed for the index-th plan of a mission."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(TAG_MISSION, int(index)))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


def _visible_subset(obstacles: ObstacleSet, visible: set[int]) -> ObstacleSet:
    kept = tuple(obstacles.obstacles[i] for i in sorted(visible))
    return dataclasses.replace(obstacles, obstacles=kept)


def _make_cfg(algo: str, population: int, iterations: int):
    """Spec defaults scaled to the requested population size."""
    if algo == "bbo":
        kept = max(int(round(0.4 * population)), 1)
        recombined = max(int(round(0.4 * population)), 1)
        while kept + recombined > population:
            recombined -= 1
        return default_config(
            algo, population=population, iterations=iterations, kept=kept, recombined=recombined
        )
    return default_config(algo, population=population, iterations=iterations)


def surviving_tail(
    polygon: ControlPolygon, fraction: float, new_start: np.ndarray
) -> ControlPolygon:
    """Drop interior points already passed and re-anchor at the vehicle.

    Interior point i of n sits at node fraction i/(n+1) along the plan;
    points at or behind ``fraction`` are dropped.  At least one interior
    point survives so the result is still a valid control polygon.
    """
    n = polygon.interior.shape[0]
    fraction = float(np.clip(fraction, 0.0, 1.0))
    nodes = np.arange(1, n + 1) / (n + 1)
    kept = polygon.interior[nodes > fraction]
    if kept.shape[0] == 0:
        kept = polygon.interior[-1:]
    return ControlPolygon(start=new_start, interior=kept.copy(), target=polygon.target)


def initial_plan(
    msg: RendezvousMessage,
    env: EnvironmentSnapshot,
    algo: str,
    cfg=None,
    seed: int = 0,
    *,
    start: np.ndarray,
    water_speed: float = 2.5,
    n_interior: int = 7,
    time_tolerance: float = 300.0,
    clearance_threshold: float = 50.0,
    limits: VehicleLimits | None = None,
    weights: PenaltyWeights | None = None,
    curve_samples: int = 100,
) -> PlanOutcome:
    """Optimize a first trajectory from a fresh random population.

    Proceed iff the best trajectory passes every feasibility clause;
    otherwise the outcome carries the violation report for the cancel
    message.
    """
    limits = limits or VehicleLimits()
    weights = weights or PenaltyWeights()
    spec = RendezvousSpec(
        start=start,
        target=msg.position,
        rendezvous_time=msg.rendezvous_time,
        time_tolerance=time_tolerance,
        clearance_threshold=clearance_threshold,
    )
    ctx = build_objective(
        env,
        spec,
        limits=limits,
        weights=weights,
        n_interior=n_interior,
        water_speed=water_speed,
        m=curve_samples,
    )
    run = optimize(algo, ctx, cfg, seed=seed)
    trajectory = ctx.trajectory(run.best_vector)
    report = check_feasible(trajectory, env, limits, spec)
    return PlanOutcome(proceed=report.feasible, run=run, trajectory=trajectory, report=report)


def replan(
    prev: OptimizerRun,
    prev_trajectory: Trajectory,
    elapsed: float,
    vehicle: VehicleState,
    env: EnvironmentSnapshot,
    algo: str,
    cfg=None,
    seed: int = 0,
    *,
    target: np.ndarray,
    remaining_time: float,
    water_speed: float = 2.5,
    time_tolerance: float = 300.0,
    clearance_threshold: float = 50.0,
    limits: VehicleLimits | None = None,
    weights: PenaltyWeights | None = None,
    curve_samples: int = 100,
) -> tuple[OptimizerRun, Trajectory, ObjectiveContext]:
    """Re-optimize the remaining leg, warm-started from the previous best.

    The vehicle position replaces the start boundary, the time budget
    shrinks to ``remaining_time``, and the surviving tail of the previous
    best polygon seeds the population verbatim.  The same environment can
    therefore never make the remaining leg worse.
    """
    if remaining_time <= 0.0:
        raise ConfigError("replan needs a positive remaining time budget")
    if prev.best is None:
        raise ConfigError("replan needs the previous best control polygon")
    t_f = prev_trajectory.t_f
    fraction = elapsed / t_f if math.isfinite(t_f) and t_f > 0.0 else 0.0
    tail = surviving_tail(prev.best, fraction, vehicle.position)
    spec = RendezvousSpec(
        start=vehicle.position,
        target=target,
        rendezvous_time=remaining_time,
        time_tolerance=time_tolerance,
        clearance_threshold=clearance_threshold,
    )
    ctx = build_objective(
        env,
        spec,
        limits=limits or VehicleLimits(),
        weights=weights or PenaltyWeights(),
        n_interior=tail.interior.shape[0],
        water_speed=water_speed,
        m=curve_samples,
    )
    run = optimize(algo, ctx, cfg, seed=seed, warm_start=tail.as_vector())
    return run, ctx.trajectory(run.best_vector), ctx


# ---------------------------------------------------------------------------
# Mission loop


def _state_row(t: float, state: VehicleState) -> list[float]:
    return [
        t,
        state.position[0],
        state.position[1],
        state.position[2],
        state.psi,
        state.theta,
        state.r,
        state.u,
        state.v,
        state.w,
    ]


def _remaining_points(trajectory: Trajectory, rel_time: float) -> np.ndarray:
    """Sample positions not yet flown (finite-time part only)."""
    times = trajectory.times
    finite = np.isfinite(times)
    ahead = finite & (times >= rel_time)
    if not ahead.any():
        return trajectory.positions[-1:]
    return trajectory.positions[ahead]


def _path_conflict(
    points: np.ndarray, obstacles: ObstacleSet, visible: set[int]
) -> int | None:
    """Index of the first visible obstacle whose sphere touches the path."""
    for i in sorted(visible):
        ob = obstacles.obstacles[i]
        dist = np.linalg.norm(points - ob.position[None, :], axis=1).min()
        if dist <= obstacles.confidence_radius(ob):
            return i
    return None


def run_mission(scenario, algo: str | None = None, cfg=None, seed: int = 0) -> MissionLog:
    """Fly one full mission; every failure mode lands in the outcome."""
    algo = algo or scenario.algorithm
    if algo not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algo!r} (have {', '.join(ALGORITHMS)})")
    spec = scenario.spec
    msg = RendezvousMessage(
        position=spec.target,
        course=0.0,
        depth=float(spec.target[2]),
        rendezvous_time=spec.rendezvous_time,
    )
    init_cfg = cfg if cfg is not None else _make_cfg(algo, scenario.population, scenario.iterations)
    replan_cfg = dataclasses.replace(init_cfg, iterations=scenario.replan_iterations)

    current = scenario.current
    obstacles = scenario.obstacles
    env_rng = substream(seed, TAG_MISSION)
    pending_drops = sorted(getattr(scenario, "drops", ()), key=lambda d: d[0])

    events: list[str] = []
    plans: list[PlanRecord] = []
    snapshots: list[EnvironmentSnapshot] = []
    visible: set[int] = set()
    plan_index = 0

    def log(t: float, message: str) -> None:
        events.append(f"t={t:.1f} {message}")

    def snapshot(t: float) -> EnvironmentSnapshot:
        return EnvironmentSnapshot(scenario.grid, current, obstacles, t)

    def sense(t: float, position: np.ndarray) -> bool:
        fresh = False
        for i, ob in enumerate(obstacles.obstacles):
            if i in visible:
                continue
            if np.linalg.norm(position - ob.position) <= scenario.sensor_range:
                visible.add(i)
                fresh = True
                log(t, f"obstacle {i} sensed ({ob.kind.value})")
        return fresh

    def planning_env(t: float) -> EnvironmentSnapshot:
        return EnvironmentSnapshot(scenario.grid, current, _visible_subset(obstacles, visible), t)

    snapshots.append(snapshot(0.0))
    sense(0.0, spec.start)

    first = initial_plan(
        msg,
        planning_env(0.0),
        algo,
        init_cfg,
        seed=_plan_seed(seed, plan_index),
        start=spec.start,
        water_speed=scenario.water_speed,
        n_interior=scenario.n_interior,
        time_tolerance=spec.time_tolerance,
        clearance_threshold=spec.clearance_threshold,
        limits=scenario.limits,
        weights=scenario.weights,
        curve_samples=scenario.curve_samples,
    )
    plan_index += 1
    plans.append(PlanRecord("initial", 0.0, first.run, first.trajectory, tuple(sorted(visible))))
    flown_rows = [_state_row(0.0, state_at(first.trajectory, 0.0))]

    def finish(outcome: str, reason: str, achieved: float) -> MissionLog:
        log_line = f"outcome {outcome}: {reason}" if reason else f"outcome {outcome}"
        log(flown_rows[-1][0], log_line)
        return MissionLog(
            scenario=scenario.name,
            algorithm=algo,
            seed=seed,
            outcome=outcome,
            reason=reason,
            plans=plans,
            flown=np.asarray(flown_rows, dtype=float),
            achieved_t_f=achieved,
            events=events,
            snapshots=snapshots,
            cancel_report=None if first.proceed else first.report,
            target_time=spec.rendezvous_time,
            time_tolerance=spec.time_tolerance,
        )

    if not first.proceed:
        reason = "; ".join(first.report.clauses()) or "initial plan infeasible"
        return finish(OUTCOME_CANCEL, reason, math.nan)
    log(0.0, f"initial plan adopted, predicted arrival {first.trajectory.t_f:.1f}")

    run = first.run
    trajectory = first.trajectory
    plan_start = 0.0
    deadline = spec.rendezvous_time + spec.time_tolerance
    next_update = scenario.field_update_period
    failure: tuple[str, str] | None = None

    def adopt(trigger: str, t: float, state: VehicleState) -> bool:
        """Replan now; False means the time budget is gone."""
        nonlocal run, trajectory, plan_start, plan_index, failure
        remaining = spec.rendezvous_time - t
        if remaining <= 0.0:
            failure = (OUTCOME_FAILED, "replan budget exhausted")
            return False
        args = dict(
            target=spec.target,
            water_speed=scenario.water_speed,
            time_tolerance=spec.time_tolerance,
            clearance_threshold=spec.clearance_threshold,
            limits=scenario.limits,
            weights=scenario.weights,
            curve_samples=scenario.curve_samples,
        )
        new_run, new_traj, _ = replan(
            run,
            trajectory,
            t - plan_start,
            state,
            planning_env(t),
            algo,
            replan_cfg,
            seed=_plan_seed(seed, plan_index),
            remaining_time=remaining,
            **args,
        )
        plan_index += 1
        # Trigger (c): a freshly adopted plan whose predicted arrival has
        # drifted past half the tolerance gets one immediate retry.
        drift = abs(new_traj.t_f - remaining)
        if not math.isfinite(drift) or drift > spec.time_tolerance / 2.0:
            retry_run, retry_traj, _ = replan(
                new_run,
                new_traj,
                0.0,
                state,
                planning_env(t),
                algo,
                replan_cfg,
                seed=_plan_seed(seed, plan_index),
                remaining_time=remaining,
                **args,
            )
            plan_index += 1
            if retry_run.best_cost.total < new_run.best_cost.total:
                new_run, new_traj, trigger = retry_run, retry_traj, "timing_drift"
        run, trajectory, plan_start = new_run, new_traj, t
        plans.append(PlanRecord(trigger, t, new_run, new_traj, tuple(sorted(visible))))
        log(t, f"replan ({trigger}), predicted arrival {t + new_traj.t_f:.1f}")
        return True

    t = 0.0
    dirty = False
    while t + 1e-9 < deadline:
        t = round(t + scenario.sim_step, 9)
        state = state_at(trajectory, t - plan_start)
        flown_rows.append(_state_row(t, state))
        if np.linalg.norm(state.position - spec.target) <= scenario.arrival_radius:
            log(t, f"arrived within {scenario.arrival_radius:.0f} m of the target")
            return finish(OUTCOME_RENDEZVOUS, "", t)
        while pending_drops and t + 1e-9 >= pending_drops[0][0]:
            _, dropped = pending_drops.pop(0)
            obstacles = dataclasses.replace(
                obstacles, obstacles=obstacles.obstacles + (dropped,)
            )
            snapshots.append(snapshot(t))
            log(t, f"obstacle {len(obstacles.obstacles) - 1} dropped ({dropped.kind.value})")
        if sense(t, state.position):
            dirty = True
        if t + 1e-9 >= next_update:
            current = evolve(current)
            obstacles = step_set(obstacles, env_rng, current)
            snapshots.append(snapshot(t))
            next_update += scenario.field_update_period
            log(t, f"environment update {len(snapshots) - 1}")
            if not adopt("field_update", t, state):
                break
            dirty = False
        elif dirty:
            conflict = _path_conflict(
                _remaining_points(trajectory, t - plan_start), obstacles, visible
            )
            if conflict is not None:
                log(t, f"obstacle {conflict} confidence sphere on the remaining path")
                if not adopt("obstacle_on_path", t, state):
                    break
            dirty = False

    if failure is None:
        failure = (OUTCOME_FAILED, "rendezvous window expired")
    return finish(failure[0], failure[1], math.nan)


# ---------------------------------------------------------------------------
# Post-hoc verification


def verify_flown_path(log: MissionLog, factor: int = 10) -> FlightCheck:
    """Re-check the flown track at ``factor``-times-denser sampling.

    Each sim step is linearly subdivided; every sub-sample is tested
    against the environment state active at its time (full obstacle roster,
    not just what the vehicle had sensed).  An incursion is a sub-sample
    inside a forbidden cell, outside the water column, or inside any
    confidence sphere.
    """
    if factor < 1:
        raise ConfigError("factor must be >= 1")
    rows = log.flown
    if rows.shape[0] < 2:
        return FlightCheck(samples=rows.shape[0], incursions=0, min_clearance=math.inf)
    t0 = rows[:-1, 0]
    dt = np.diff(rows[:, 0])
    frac = (np.arange(factor) + 1) / factor
    times = (t0[:, None] + dt[:, None] * frac[None, :]).ravel()
    p0 = rows[:-1, 1:4]
    dp = np.diff(rows[:, 1:4], axis=0)
    points = (p0[:, None, :] + dp[:, None, :] * frac[None, :, None]).reshape(-1, 3)
    times = np.concatenate([[rows[0, 0]], times])
    points = np.concatenate([rows[:1, 1:4], points])

    stamps = np.array([snap.timestamp for snap in log.snapshots])
    which = np.searchsorted(stamps, times, side="right") - 1
    which = np.clip(which, 0, len(log.snapshots) - 1)

    incursions = 0
    min_clearance = math.inf
    for idx in np.unique(which):
        snap = log.snapshots[idx]
        pts = points[which == idx]
        ok = feasible_mask(snap.grid, pts)
        d_map = np.where(ok, distances_to_forbidden(snap.grid, pts[:, :2]), 0.0)
        d_obs = clearances(snap.obstacles, pts)
        margin = np.minimum(d_map, d_obs)
        incursions += int(((~ok) | (d_obs < 0.0)).sum())
        min_clearance = min(min_clearance, float(margin.min()))
    return FlightCheck(samples=points.shape[0], incursions=incursions, min_clearance=min_clearance)


def mission_to_json_str(log: MissionLog) -> str:
    return json.dumps(log.to_json(), indent=2, sort_keys=False) + "\n"
