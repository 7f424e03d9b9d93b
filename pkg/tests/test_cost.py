"""Cost-model tests against hand-computed penalty values.

Trajectories here are synthetic: straight constant-speed runs whose sampled
arrays are built directly, so every expected term is plain arithmetic.
"""

import dataclasses

import numpy as np
import pytest

from rendezplan.cost import (
    CostBreakdown,
    FEASIBLE_TOL,
    INFEASIBLE_PENALTY,
    PenaltyWeights,
    RendezvousSpec,
    VehicleLimits,
    body_velocities,
    check_feasible,
    evaluate,
    excess_sq,
    sample_distances,
    shortfall_sq,
)
from rendezplan.currents import CurrentField
from rendezplan.envmap import GridMap, feasible_mask, is_feasible
from rendezplan.environment import EnvironmentSnapshot
from rendezplan.errors import ConfigError
from rendezplan.obstacles import Obstacle, ObstacleKind, ObstacleSet
from rendezplan.spline import Trajectory

START = np.array([500.0, 500.0, 20.0])
TARGET = np.array([2900.0, 500.0, 20.0])
LIMITS = VehicleLimits(u_max=2.6, v_max=0.5, theta_max=0.6, r_max=0.3)


def make_spec(t_r=1200.0, eps=300.0, threshold=50.0, target=TARGET):
    return RendezvousSpec(
        start=START,
        target=target,
        rendezvous_time=t_r,
        time_tolerance=eps,
        clearance_threshold=threshold,
    )


def open_water_env(obstacles=()):
    grid = GridMap(np.ones((40, 40), dtype=bool), cell_size=100.0)
    current = CurrentField(vortices=(), seed=7)
    return EnvironmentSnapshot(grid=grid, current=current, obstacles=ObstacleSet(obstacles))


def straight_traj(start, end, t_f, n=101, blocked=False):
    """Constant-speed straight line sampled at n points.

    With blocked=True the final segment never completes: its duration and
    t_f become infinite and the infeasible flag is set.
    """
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    pts = start + np.linspace(0.0, 1.0, n)[:, None] * (end - start)
    d = end - start
    length = float(np.linalg.norm(d))
    e = d / length
    psi = np.full(n, np.arctan2(e[1], e[0]))
    theta = np.full(n, np.arctan2(-e[2], np.hypot(e[0], e[1])))
    speed = length / t_f if np.isfinite(t_f) else 1.0
    vel = np.tile(speed * e, (n, 1))
    times = np.linspace(0.0, float(t_f) if np.isfinite(t_f) else 1.0, n)
    if blocked:
        times = times.copy()
        times[-1] = np.inf
        t_f = np.inf
    return Trajectory(
        times=times,
        positions=pts,
        psi=psi,
        theta=theta,
        r=np.zeros(n),
        velocities=vel,
        t_f=float(t_f),
        length=length,
        infeasible=blocked,
    )


# ---------------------------------------------------------------------------
# helpers


def test_excess_sq_vector():
    out = excess_sq(np.array([-3.0, 1.0, 2.0]), 2.0)
    assert out == pytest.approx([0.25, 0.0, 0.0], abs=1e-15)


def test_shortfall_sq_scalar_and_negative_distance():
    assert shortfall_sq(30.0, 50.0) == pytest.approx(0.16, abs=1e-12)
    assert shortfall_sq(80.0, 50.0) == 0.0
    # penetration (negative distance) scales past 1
    assert shortfall_sq(-50.0, 50.0) == pytest.approx(4.0, abs=1e-12)


def test_body_velocities_recover_along_track_speed():
    traj = straight_traj(START, np.array([2000.0, 1300.0, 120.0]), t_f=900.0)
    body = body_velocities(traj)
    speed = traj.length / 900.0
    assert np.allclose(body[:, 0], speed, atol=1e-12)
    assert np.allclose(body[:, 1:], 0.0, atol=1e-12)


def test_sample_distances_min_of_map_and_obstacles():
    occ = np.ones((40, 40), dtype=bool)
    occ[:, 0] = False  # land strip along x in [0, 100)
    grid = GridMap(occ, cell_size=100.0)
    ob = Obstacle(ObstacleKind.QUASI_STATIC, [2000.0, 500.0, 20.0], 20.0, 5.0)
    env = EnvironmentSnapshot(
        grid=grid, current=CurrentField(vortices=(), seed=7), obstacles=ObstacleSet((ob,))
    )
    pts = np.array(
        [
            [300.0, 550.0, 20.0],   # map governs; on the row of cell centers
            [1960.0, 500.0, 20.0],  # obstacle sphere governs: 40 - 30 = 10
            [50.0, 500.0, 20.0],    # inside land: 0
            [300.0, 500.0, -5.0],   # above surface: 0
            [-500.0, 500.0, 20.0],  # off the map: 0
        ]
    )
    d = sample_distances(pts, env)
    assert d[0] == pytest.approx(250.0 - 50.0 * np.sqrt(2.0), abs=1e-9)
    assert d[1] == pytest.approx(10.0, abs=1e-12)
    assert d[2] == 0.0 and d[3] == 0.0 and d[4] == 0.0


def test_feasible_mask_matches_scalar():
    occ = np.ones((12, 9), dtype=bool)
    occ[3:6, 2:7] = False
    grid = GridMap(occ, cell_size=10.0, origin=(-20.0, 5.0), depth_limit=100.0)
    rng = np.random.default_rng(11)
    pts = np.column_stack(
        [
            rng.uniform(-60.0, 120.0, 400),
            rng.uniform(-30.0, 160.0, 400),
            rng.uniform(-20.0, 140.0, 400),
        ]
    )
    mask = feasible_mask(grid, pts)
    assert mask.dtype == bool
    for p, m in zip(pts, mask):
        assert m == is_feasible(grid, p)


# ---------------------------------------------------------------------------
# evaluate: term-by-term oracles


def test_perfect_run_scores_zero_and_is_feasible():
    traj = straight_traj(START, TARGET, t_f=1200.0)
    b = evaluate(traj, open_water_env(), LIMITS, make_spec())
    assert b.total == 0.0
    assert b.pi_term == 0.0
    assert b.terms == (0.0,) * 7
    assert b.feasible


def test_timing_terms_frozen_values():
    # 400 s late against a 1800 s request and a 300 s window
    traj = straight_traj(START, TARGET, t_f=2200.0)
    b = evaluate(traj, open_water_env(), LIMITS, make_spec(t_r=1800.0))
    assert b.pi_term == pytest.approx(0.04938271604938271, abs=1e-9)
    assert b.terms[4] == pytest.approx(0.1111111111111111, abs=1e-9)
    assert b.terms[:4] == (0.0,) * 4 and b.terms[5:] == (0.0, 0.0)
    assert not b.feasible


def test_early_arrival_inside_window_keeps_term5_zero():
    traj = straight_traj(START, TARGET, t_f=1100.0)
    b = evaluate(traj, open_water_env(), LIMITS, make_spec())
    assert b.pi_term == pytest.approx((100.0 / 1200.0) ** 2, abs=1e-12)
    assert b.terms[4] == 0.0
    assert b.feasible is False or b.terms == (0.0,) * 7
    assert b.feasible  # inside the window and clean elsewhere


def test_surge_excess_frozen_value():
    # 10% over the surge limit -> 0.01
    t_f = 2400.0 / (1.1 * LIMITS.u_max)
    traj = straight_traj(START, TARGET, t_f=t_f)
    b = evaluate(traj, open_water_env(), LIMITS, make_spec(t_r=t_f))
    assert b.terms[0] == pytest.approx(0.01, abs=1e-12)
    assert b.terms[1:] == (0.0,) * 6
    assert not b.feasible


def test_sway_excess_frozen_value():
    traj = straight_traj(START, TARGET, t_f=1200.0)
    vel = traj.velocities.copy()
    vel[:, 1] = 0.6  # lateral slip against the 0.5 limit
    traj = dataclasses.replace(traj, velocities=vel)
    b = evaluate(traj, open_water_env(), LIMITS, make_spec())
    assert b.terms[1] == pytest.approx(0.03999999999999998, abs=1e-12)
    assert b.terms[0] == 0.0 and b.terms[2:] == (0.0,) * 5


def test_pitch_excess_frozen_value():
    traj = straight_traj(START, TARGET, t_f=1200.0)
    traj = dataclasses.replace(traj, theta=np.full(101, 0.8))
    b = evaluate(traj, open_water_env(), LIMITS, make_spec())
    # theta override decouples the body frame; surge drops below its limit,
    # never above, so only the pitch term fires
    assert b.terms[2] == pytest.approx(0.11111111111111122, abs=1e-12)
    assert b.terms[0] == 0.0 and b.terms[1] == 0.0 and b.terms[3] == 0.0


def test_yaw_rate_excess_frozen_value():
    traj = straight_traj(START, TARGET, t_f=1200.0)
    r = traj.r.copy()
    r[40] = 0.4
    traj = dataclasses.replace(traj, r=r)
    b = evaluate(traj, open_water_env(), LIMITS, make_spec())
    assert b.terms[3] == pytest.approx(0.11111111111111122, abs=1e-12)
    assert sum(t > 0 for t in b.terms) == 1


def test_clearance_shortfall_frozen_value():
    # confidence sphere 20 + 2*5 = 30, nearest sample 60 m from the center
    ob = Obstacle(ObstacleKind.MOVING, [1700.0, 560.0, 20.0], 20.0, 5.0, step_scale=1.0)
    traj = straight_traj(START, TARGET, t_f=1200.0)
    b = evaluate(traj, open_water_env((ob,)), LIMITS, make_spec())
    assert b.terms[5] == pytest.approx(0.16000000000000003, abs=1e-12)
    assert sum(t > 0 for t in b.terms) == 1
    assert not b.feasible


def test_terminal_miss_frozen_value():
    target = np.array([2900.0, 600.0, 20.0])
    traj = straight_traj(START, TARGET, t_f=1200.0)  # ends 100 m short of target
    b = evaluate(traj, open_water_env(), LIMITS, make_spec(target=target))
    assert b.terms[6] == pytest.approx(0.0011401988506795585, abs=1e-15)
    assert sum(t > 0 for t in b.terms) == 1


def test_terminal_denominator_floor_at_one():
    spec = RendezvousSpec(
        start=np.zeros(3),
        target=np.array([0.3, 0.0, 0.1]),
        rendezvous_time=10.0,
        time_tolerance=5.0,
        clearance_threshold=50.0,
    )
    traj = straight_traj(np.zeros(3), np.array([0.3, 0.0, 0.2]), t_f=10.0)
    b = evaluate(traj, open_water_env(), LIMITS, spec)
    # |target| < 1, so the miss is squared against 1, not the tiny norm
    assert b.terms[6] == pytest.approx(0.1**2, abs=1e-12)


def test_total_is_weighted_sum():
    traj = straight_traj(START, TARGET, t_f=2200.0)
    w = PenaltyWeights()
    b = evaluate(traj, open_water_env(), LIMITS, make_spec(t_r=1800.0), w)
    expected = b.pi_term + float(w.as_array() @ np.array(b.terms))
    assert b.total == pytest.approx(expected, rel=1e-15)
    assert b.collision_term == b.terms[5]


def test_default_weights():
    w = PenaltyWeights()
    assert tuple(w.as_array()) == (10.0, 10.0, 10.0, 10.0, 10.0, 100.0, 10.0)


# ---------------------------------------------------------------------------
# blocked trajectories


def test_blocked_run_gets_sentinel_and_zeroed_time_terms():
    traj = straight_traj(START, TARGET, t_f=1200.0, blocked=True)
    b = evaluate(traj, open_water_env(), LIMITS, make_spec())
    assert b.pi_term == 0.0
    assert b.terms[4] == 0.0
    assert b.total == pytest.approx(INFEASIBLE_PENALTY)
    assert not b.feasible


def test_blocked_run_keeps_geometric_terms_ordered():
    ob = Obstacle(ObstacleKind.MOVING, [1700.0, 560.0, 20.0], 20.0, 5.0, step_scale=1.0)
    near = straight_traj(START, TARGET, t_f=1200.0, blocked=True)
    clear = straight_traj(START + [0, 600, 0], TARGET + [0, 600, 0], t_f=1200.0, blocked=True)
    env = open_water_env((ob,))
    spec = make_spec()
    b_near = evaluate(near, env, LIMITS, spec)
    b_clear = evaluate(clear, env, LIMITS, spec)
    # both carry the sentinel, but geometry still separates them
    assert b_near.total > b_clear.total
    assert b_clear.total >= INFEASIBLE_PENALTY


def test_any_finite_candidate_beats_every_blocked_one():
    blocked = straight_traj(START, TARGET, t_f=1200.0, blocked=True)
    bad = straight_traj(START, TARGET, t_f=300.0)  # wildly fast and late terms
    env = open_water_env()
    spec = make_spec()
    assert evaluate(bad, env, LIMITS, spec).total < evaluate(blocked, env, LIMITS, spec).total


# ---------------------------------------------------------------------------
# weights: monotonicity and ordering


def test_doubling_active_weight_raises_total():
    traj = straight_traj(START, TARGET, t_f=2200.0)
    env = open_water_env()
    spec = make_spec(t_r=1800.0)
    base = evaluate(traj, env, LIMITS, spec, PenaltyWeights())
    heavy = evaluate(traj, env, LIMITS, spec, PenaltyWeights(window=20.0))
    assert heavy.total > base.total
    assert heavy.total == pytest.approx(base.total + 10.0 * base.terms[4], rel=1e-12)


def test_doubling_inactive_weight_leaves_total_alone():
    traj = straight_traj(START, TARGET, t_f=2200.0)
    env = open_water_env()
    spec = make_spec(t_r=1800.0)
    base = evaluate(traj, env, LIMITS, spec, PenaltyWeights())
    heavy = evaluate(traj, env, LIMITS, spec, PenaltyWeights(collision=200.0))
    assert heavy.total == base.total


def test_feasible_pair_ordering_survives_reweighting():
    a = straight_traj(START, TARGET, t_f=1150.0)
    b = straight_traj(START, TARGET, t_f=1300.0)
    env = open_water_env()
    spec = make_spec()
    for w in (PenaltyWeights(), PenaltyWeights(20, 20, 20, 20, 20, 200, 20)):
        ca = evaluate(a, env, LIMITS, spec, w)
        cb = evaluate(b, env, LIMITS, spec, w)
        assert ca.feasible and cb.feasible
        assert ca.total == ca.pi_term and cb.total == cb.pi_term
        assert ca.total < cb.total


# ---------------------------------------------------------------------------
# check_feasible


def test_check_perfect_run_reports_no_violations():
    traj = straight_traj(START, TARGET, t_f=1200.0)
    rep = check_feasible(traj, open_water_env(), LIMITS, make_spec())
    assert rep.feasible
    assert rep.violations == ()


def test_check_names_each_clause():
    env = open_water_env()
    spec = make_spec()

    late = straight_traj(START, TARGET, t_f=1600.0)
    assert "time_window" in check_feasible(late, env, spec=spec, limits=LIMITS).clauses()

    fast = straight_traj(START, TARGET, t_f=800.0)
    assert "surge_limit" in check_feasible(fast, env, LIMITS, spec).clauses()

    off_target = straight_traj(START, TARGET + [0, 100, 0], t_f=1200.0)
    assert "end_boundary" in check_feasible(off_target, env, LIMITS, spec).clauses()

    off_start = straight_traj(START + [0, 50, 0], TARGET, t_f=1200.0)
    assert "start_boundary" in check_feasible(off_start, env, LIMITS, spec).clauses()

    ob = Obstacle(ObstacleKind.DYNAMIC, [1700.0, 560.0, 20.0], 20.0, 5.0, step_scale=1.0)
    near = straight_traj(START, TARGET, t_f=1200.0)
    rep = check_feasible(near, open_water_env((ob,)), LIMITS, spec)
    assert "clearance" in rep.clauses()
    v = rep.violations[0]
    assert v.worst_index == 50
    assert v.value == pytest.approx(30.0, abs=1e-9)

    blocked = straight_traj(START, TARGET, t_f=1200.0, blocked=True)
    clauses = check_feasible(blocked, env, LIMITS, spec).clauses()
    assert "progress" in clauses and "time_window" in clauses


def test_check_worst_index_points_at_peak_violation():
    traj = straight_traj(START, TARGET, t_f=1200.0)
    r = traj.r.copy()
    r[17] = 0.35
    r[63] = -0.5
    traj = dataclasses.replace(traj, r=r)
    rep = check_feasible(traj, open_water_env(), LIMITS, make_spec())
    (v,) = [v for v in rep.violations if v.clause == "yaw_rate_limit"]
    assert v.worst_index == 63
    assert v.value == pytest.approx(0.5)
    assert v.limit == 0.3


def test_evaluate_and_check_agree_on_random_runs():
    rng = np.random.default_rng(2024)
    env_clear = open_water_env()
    ob = Obstacle(ObstacleKind.MOVING, [1700.0, 520.0, 20.0], 20.0, 5.0, step_scale=1.0)
    env_ob = open_water_env((ob,))
    spec = make_spec()
    n_feasible = 0
    for _ in range(300):
        speed = rng.uniform(0.8, 3.4)
        t_f = 2400.0 / speed
        end = TARGET.copy()
        if rng.random() < 0.4:
            end = end + rng.uniform(1.0, 200.0) * rng.standard_normal(3)
            end[2] = abs(end[2])
        traj = straight_traj(START, end, t_f=t_f, blocked=bool(rng.random() < 0.1))
        if rng.random() < 0.2:
            r = traj.r.copy()
            r[rng.integers(0, 101)] = rng.uniform(-0.6, 0.6)
            traj = dataclasses.replace(traj, r=r)
        env = env_ob if rng.random() < 0.4 else env_clear
        b = evaluate(traj, env, LIMITS, spec)
        rep = check_feasible(traj, env, LIMITS, spec)
        assert b.feasible == rep.feasible, (b, rep)
        n_feasible += rep.feasible
    assert 10 < n_feasible < 290  # both outcomes exercised


# ---------------------------------------------------------------------------
# records and validation


def test_breakdown_serialization_roundtrip():
    traj = straight_traj(START, TARGET, t_f=2200.0)
    b = evaluate(traj, open_water_env(), LIMITS, make_spec(t_r=1800.0))
    d = b.to_json()
    assert d["total"] == b.total and d["terms"][4] == b.terms[4]
    row = b.csv_row()
    assert row.count(",") == 9
    assert row.endswith(",0")


def test_breakdown_from_total_wraps_scalar():
    b = CostBreakdown.from_total(3.5)
    assert b.total == 3.5 and b.pi_term == 3.5
    assert not b.feasible


def test_limit_and_spec_validation():
    with pytest.raises(ConfigError):
        VehicleLimits(u_max=0.0)
    with pytest.raises(ConfigError):
        RendezvousSpec(np.zeros(3), np.zeros(2), 100.0, 10.0, 5.0)
    with pytest.raises(ConfigError):
        RendezvousSpec(np.zeros(3), np.ones(3), -1.0, 10.0, 5.0)
    with pytest.raises(ConfigError):
        RendezvousSpec(np.zeros(3), np.ones(3), 100.0, 10.0, 0.0)


def test_feasible_tolerance_is_tight():
    assert FEASIBLE_TOL == 1e-12
