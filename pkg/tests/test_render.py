"""SVG renderer checks: structure, layer toggles, shading, determinism."""

import dataclasses
import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from rendezplan.currents import CurrentField, make_random_field
from rendezplan.envmap import GridMap
from rendezplan.environment import EnvironmentSnapshot
from rendezplan.errors import ConfigError
from rendezplan.mission import run_mission
from rendezplan.obstacles import Obstacle, ObstacleKind, ObstacleSet
from rendezplan.render import mission_svgs, svg_scene
from rendezplan.scenarios import load_preset
from rendezplan.spline import Trajectory

NS = "{http://www.w3.org/2000/svg}"


def still_water(depth=100.0):
    return CurrentField(vortices=(), vertical_scale=0.0, n_layers=1, depth_extent=depth)


def tiny_env(occ=None):
    if occ is None:
        occ = np.ones((4, 4), dtype=bool)
    grid = GridMap(occupancy=occ, cell_size=10.0, origin=(0.0, 0.0), depth_limit=100.0)
    return EnvironmentSnapshot(grid, still_water(), ObstacleSet())


def groups(svg):
    root = ET.fromstring(svg)
    return {g.get("id"): g for g in root.iter(f"{NS}g") if g.get("id")}


def straight_traj(points, t_f=10.0):
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    return Trajectory(
        times=np.linspace(0.0, t_f, n),
        positions=pts,
        psi=np.zeros(n),
        theta=np.zeros(n),
        r=np.zeros(n),
        velocities=np.zeros((n, 3)),
        t_f=t_f,
        length=float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1))),
    )


def test_document_is_wellformed_with_expected_viewbox():
    svg = svg_scene(tiny_env())
    root = ET.fromstring(svg)
    assert root.get("viewBox") == "0 0 40 40"
    assert svg == svg_scene(tiny_env())  # byte-identical on repeat


def test_layer_toggles_control_groups():
    env = tiny_env()
    svg = svg_scene(env, layers=("map",))
    g = groups(svg)
    assert set(g) == {"map"}
    svg = svg_scene(env, layers=("map", "obstacles"))
    assert set(groups(svg)) == {"map", "obstacles"}
    with pytest.raises(ConfigError, match="svg layers"):
        svg_scene(env, layers=("map", "bathymetry"))


def test_land_runs_merge_into_single_rects():
    occ = np.ones((4, 4), dtype=bool)
    occ[0, 0] = False          # bottom-left cell
    occ[2, 1:3] = False        # run of two cells in row 2
    svg = svg_scene(tiny_env(occ), layers=("map",))
    rects = ET.fromstring(svg).iter(f"{NS}rect")
    land = [r for r in rects if r.get("fill") != "#dbeaf4"]
    assert len(land) == 2
    by_width = {r.get("width"): r for r in land}
    assert set(by_width) == {"10", "20"}
    # world row 0 is the bottom of the chart, so it draws near svg y = 30
    assert by_width["10"].get("x") == "0"
    assert by_width["10"].get("y") == "30"
    assert by_width["20"].get("x") == "10"
    assert by_width["20"].get("y") == "10"


def test_obstacles_draw_body_and_confidence_circles():
    obs = ObstacleSet(
        obstacles=(
            Obstacle(kind=ObstacleKind.QUASI_STATIC, position=np.array([20.0, 20.0, 5.0]),
                     radius=4.0, uncertainty=1.5),
        )
    )
    env = dataclasses.replace(tiny_env(), obstacles=obs)
    svg = svg_scene(env, layers=("obstacles",))
    circles = list(ET.fromstring(svg).iter(f"{NS}circle"))
    assert len(circles) == 2
    radii = sorted(float(c.get("r")) for c in circles)
    assert radii[0] == 4.0
    assert radii[1] == pytest.approx(obs.confidence_radius(obs.obstacles[0]))
    dashed = [c for c in circles if c.get("stroke-dasharray")]
    assert len(dashed) == 1 and float(dashed[0].get("r")) == radii[1]


def test_active_path_shading_tracks_depth():
    traj = straight_traj([[5, 35, 0], [15, 35, 0], [25, 35, 100], [35, 35, 100]])
    svg = svg_scene(tiny_env(), paths=[traj], layers=("path",))
    lines = list(ET.fromstring(svg).iter(f"{NS}line"))
    assert len(lines) == 3
    assert lines[0].get("stroke") == "#4287f5"   # surface segment, light
    assert lines[-1].get("stroke") == "#0a1450"  # at depth limit, dark
    # middle segment midpoint sits at half depth, strictly between the two
    mid = int(lines[1].get("stroke")[1:3], 16)
    assert int("0a", 16) < mid < int("42", 16)


def test_history_paths_draw_thin_polylines():
    old = straight_traj([[5, 5, 0], [35, 5, 0]])
    new = straight_traj([[5, 5, 0], [35, 35, 0]])
    svg = svg_scene(tiny_env(), paths=[old, new], layers=("path",))
    root = ET.fromstring(svg)
    polys = list(root.iter(f"{NS}polyline"))
    lines = list(root.iter(f"{NS}line"))
    assert len(polys) == 1 and polys[0].get("stroke") == "#9aa3ab"
    assert len(lines) == 1  # the active plan only


def test_current_layer_subsamples_field():
    field = make_random_field(seed=9, n_vortices=6, extent=(0.0, 0.0, 400.0, 400.0))
    grid = GridMap(np.ones((40, 40), dtype=bool), cell_size=10.0)
    env = EnvironmentSnapshot(grid, field, ObstacleSet())
    svg = svg_scene(env, layers=("current",), arrows=8)
    lines = list(ET.fromstring(svg).iter(f"{NS}line"))
    assert 0 < len(lines) <= 8 * 8
    # still water renders an empty group rather than zero-length spears
    assert list(ET.fromstring(svg_scene(tiny_env(), layers=("current",))).iter(f"{NS}line")) == []


def test_markers_render_start_and_target():
    env = tiny_env()
    svg = svg_scene(env, layers=("map",), start=np.array([5.0, 5.0, 0.0]),
                    target=np.array([35.0, 35.0, 0.0]))
    g = groups(svg)
    assert "markers" in g
    assert len(list(g["markers"].iter(f"{NS}circle"))) == 1
    assert len(list(g["markers"].iter(f"{NS}rect"))) == 1


def test_no_unstable_content():
    svg = svg_scene(tiny_env())
    assert not re.search(r"\d\.\d{3,}", svg)  # coordinates capped at 2 decimals
    assert "date" not in svg.lower() and "id=\"map\"" in svg


def test_mission_svgs_one_per_plan(drill):
    log, scenario = drill
    out = mission_svgs(log, scenario)
    assert len(out) == len(log.plans)
    assert out[0][0] == "plan00_initial"
    for name, svg in out:
        root = ET.fromstring(svg)
        assert root.tag == f"{NS}svg"
    # later frames keep earlier paths as history
    last = out[-1][1]
    polys = list(ET.fromstring(last).iter(f"{NS}polyline"))
    assert len(polys) == len(log.plans) - 1


@pytest.fixture(scope="module")
def drill():
    scenario = load_preset("scenario3")
    scenario = dataclasses.replace(
        scenario, population=24, iterations=24, replan_iterations=16
    )
    log = run_mission(scenario, seed=1)
    assert len(log.plans) >= 2
    return log, scenario
