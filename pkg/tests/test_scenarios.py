"""Scenario schema, world construction, and shipped presets."""

import copy
import json
import os

import numpy as np
import pytest

from rendezplan.envmap import is_feasible
from rendezplan.errors import ConfigError, MapInputError
from rendezplan.obstacles import ObstacleKind
from rendezplan.scenarios import (
    PRESET_NAMES,
    SCHEMA_VERSION,
    build_scenario,
    load_preset,
    load_scenario,
    preset_document,
    write_presets,
)

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def minimal_doc():
    return {
        "version": SCHEMA_VERSION,
        "name": "unit",
        "seed": 5,
        "map": {"kind": "open", "width": 40, "height": 40, "cell_size": 10.0},
        "current": {"vortices": 4, "extent": [0.0, 0.0, 400.0, 400.0]},
        "obstacles": {},
        "rendezvous": {
            "start": [50.0, 50.0, 20.0],
            "target": [350.0, 350.0, 30.0],
            "time": 200.0,
            "tolerance": 40.0,
            "clearance": 15.0,
        },
        "planner": {"control_points": 3, "population": 20, "iterations": 10},
        "mission": {},
    }


# ---------------------------------------------------------------------------
# Presets


def test_presets_build_with_pinned_values():
    expected_obstacles = {"scenario1": 0, "scenario2": 6, "scenario3": 8, "scenario4": 8}
    for name in PRESET_NAMES:
        sc = load_preset(name)
        assert sc.name == name
        assert sc.grid.occupancy.shape == (350, 350)
        assert sc.grid.cell_size == 10.0
        assert len(sc.current.vortices) == 50
        assert len(sc.obstacles.obstacles) == expected_obstacles[name]
        assert sc.spec.rendezvous_time == 1800.0
        assert sc.spec.time_tolerance == 300.0
        assert sc.spec.clearance_threshold == 50.0
        assert sc.water_speed == 2.5
        assert sc.n_interior == 7
        assert sc.population == 100
        assert sc.iterations == 100
        assert sc.replan_iterations == 40
        assert sc.field_update_period == 450.0
        assert sc.sim_step == 1.0
        assert sc.sensor_range == 500.0
        assert sc.arrival_radius == 10.0
        assert sc.default_runs == 30
        # endpoints must be in open water on every preset
        assert is_feasible(sc.grid, sc.spec.start)
        assert is_feasible(sc.grid, sc.spec.target)


def test_scenario4_has_land_and_others_do_not():
    assert load_preset("scenario1").grid.occupancy.all()
    grid4 = load_preset("scenario4").grid
    assert not grid4.occupancy.all()
    assert grid4.occupancy.sum() > 0.8 * grid4.occupancy.size  # mostly water


def test_preset_obstacle_mix():
    sc3 = load_preset("scenario3")
    kinds = [ob.kind for ob in sc3.obstacles.obstacles]
    assert kinds.count(ObstacleKind.QUASI_STATIC) == 4
    assert kinds.count(ObstacleKind.MOVING) == 2
    assert kinds.count(ObstacleKind.DYNAMIC) == 2
    for ob in sc3.obstacles.obstacles:
        if ob.kind is ObstacleKind.QUASI_STATIC:
            assert ob.step_scale == 0.0
        else:
            assert ob.step_scale == 5.0
        if ob.kind is ObstacleKind.DYNAMIC:
            assert ob.radius_state is not None


def test_repo_preset_files_match_generator():
    packaged = os.path.join(REPO_ROOT, "src", "rendezplan", "presets")
    for name in PRESET_NAMES:
        for where in (os.path.join(REPO_ROOT, "presets"), packaged):
            path = os.path.join(where, f"{name}.json")
            with open(path, encoding="utf-8") as fh:
                on_disk = json.load(fh)
            assert on_disk == preset_document(name), f"{path} drifted from the generator"


def test_write_presets_roundtrip(tmp_path):
    paths = write_presets(str(tmp_path))
    assert len(paths) == len(PRESET_NAMES)
    for name, path in zip(PRESET_NAMES, paths):
        sc_file = load_scenario(path)
        sc_mem = load_preset(name)
        assert sc_file.name == sc_mem.name
        assert np.array_equal(sc_file.grid.occupancy, sc_mem.grid.occupancy)
        assert len(sc_file.current.vortices) == len(sc_mem.current.vortices)
        for a, b in zip(sc_file.current.vortices, sc_mem.current.vortices):
            assert a.center == b.center and a.radius == b.radius
        assert len(sc_file.obstacles.obstacles) == len(sc_mem.obstacles.obstacles)
        for a, b in zip(sc_file.obstacles.obstacles, sc_mem.obstacles.obstacles):
            assert np.array_equal(a.position, b.position)
            assert a.kind is b.kind and a.radius == b.radius


def test_scenario_build_deterministic():
    a = build_scenario(preset_document("scenario3"))
    b = build_scenario(preset_document("scenario3"))
    for va, vb in zip(a.current.vortices, b.current.vortices):
        assert va.center == vb.center
    for oa, ob in zip(a.obstacles.obstacles, b.obstacles.obstacles):
        assert np.array_equal(oa.position, ob.position)
        assert oa.radius == ob.radius


# ---------------------------------------------------------------------------
# Map kinds


def test_open_map_is_all_water():
    sc = build_scenario(minimal_doc())
    assert sc.grid.occupancy.all()
    assert sc.grid.occupancy.shape == (40, 40)


def test_synthetic_islands_block_cells():
    doc = minimal_doc()
    doc["map"] = {
        "kind": "synthetic",
        "width": 40,
        "height": 40,
        "cell_size": 10.0,
        "islands": [
            {"kind": "circle", "center": [200.0, 200.0], "radius": 35.0},
            {"kind": "rect", "min": [0.0, 0.0], "max": [50.0, 50.0]},
        ],
    }
    doc["rendezvous"]["start"] = [80.0, 80.0, 20.0]
    sc = build_scenario(doc)
    occ = sc.grid.occupancy
    # circle center cell and rect corner cell are land; far corner is water
    assert not occ[20, 20]
    assert not occ[0, 0]
    assert occ[39, 39]
    # cell centers just outside the circle stay water
    assert occ[20, 16] and not occ[20, 17]


def test_raster_map_kind(tmp_path):
    # two-tone: dark water strip, bright land strip
    pixels = np.full((16, 16), 200, dtype=np.uint8)
    pixels[:, :10] = 30
    path = tmp_path / "chart.pgm"
    with open(path, "wb") as fh:
        fh.write(b"P5\n16 16\n255\n")
        fh.write(pixels.tobytes())
    doc = minimal_doc()
    doc["map"] = {"kind": "raster", "path": "chart.pgm", "cell_size": 10.0, "k": 2}
    doc["rendezvous"] = {
        "start": [15.0, 15.0, 20.0],
        "target": [85.0, 145.0, 30.0],
        "time": 80.0,
        "tolerance": 30.0,
        "clearance": 5.0,
    }
    sc = build_scenario(doc, base_dir=str(tmp_path))
    assert sc.grid.occupancy[:, :10].all()
    assert not sc.grid.occupancy[:, 10:].any()


def test_grid_json_map_kind(tmp_path):
    from rendezplan.envmap import save_grid_json

    sc0 = build_scenario(minimal_doc())
    path = tmp_path / "grid.json"
    save_grid_json(sc0.grid, str(path))
    doc = minimal_doc()
    doc["map"] = {"kind": "grid_json", "path": "grid.json"}
    sc = build_scenario(doc, base_dir=str(tmp_path))
    assert np.array_equal(sc.grid.occupancy, sc0.grid.occupancy)


# ---------------------------------------------------------------------------
# Drops


def test_drops_parse_into_obstacles():
    doc = minimal_doc()
    doc["drops"] = [
        {
            "time": 60.0,
            "kind": "moving",
            "position": [100.0, 100.0, 25.0],
            "radius": 30.0,
            "uncertainty": 5.0,
            "step_scale": 1.0,
        }
    ]
    sc = build_scenario(doc)
    assert len(sc.drops) == 1
    when, ob = sc.drops[0]
    assert when == 60.0
    assert ob.kind is ObstacleKind.MOVING
    assert ob.radius == 30.0 and ob.uncertainty == 5.0


# ---------------------------------------------------------------------------
# Validation


def test_validation_rejects_bad_documents():
    cases = []

    doc = minimal_doc()
    doc["bogus"] = 1
    cases.append((doc, "unknown top-level"))

    doc = minimal_doc()
    doc["version"] = 99
    cases.append((doc, "unsupported scenario version"))

    doc = minimal_doc()
    del doc["rendezvous"]
    cases.append((doc, "missing the 'rendezvous'"))

    doc = minimal_doc()
    doc["map"]["kind"] = "hologram"
    cases.append((doc, "unknown map kind"))

    doc = minimal_doc()
    doc["map"] = {"kind": "synthetic", "width": 8, "height": 8, "islands": [{"kind": "blob"}]}
    cases.append((doc, "unknown kind"))

    doc = minimal_doc()
    doc["obstacles"] = {"quasi_static": -1}
    cases.append((doc, "non-negative"))

    doc = minimal_doc()
    doc["obstacles"] = {"quasi_static": 2}
    cases.append((doc, "spawn_box"))

    doc = minimal_doc()
    doc["rendezvous"]["start"] = [1.0, 2.0]
    cases.append((doc, "3-vector"))

    doc = minimal_doc()
    doc["output"] = {"svg_layers": ["map", "sonar"]}
    cases.append((doc, "unknown svg layers"))

    doc = minimal_doc()
    doc["drops"] = [{"time": 10.0, "kind": "ghost", "position": [1.0, 2.0, 3.0]}]
    cases.append((doc, "unknown kind"))

    doc = minimal_doc()
    doc["current"] = {}
    cases.append((doc, "missing"))

    for bad, fragment in cases:
        with pytest.raises(ConfigError, match=fragment):
            build_scenario(copy.deepcopy(bad))


def test_load_scenario_file_errors(tmp_path):
    with pytest.raises(MapInputError, match="cannot read"):
        load_scenario(str(tmp_path / "missing.json"))
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    with pytest.raises(MapInputError, match="not valid JSON"):
        load_scenario(str(bad))


def test_unknown_preset_name():
    with pytest.raises(ConfigError, match="unknown preset"):
        preset_document("scenario9")
