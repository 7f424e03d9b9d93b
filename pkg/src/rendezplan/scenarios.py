"""Scenario configuration: versioned JSON schema, world builders, presets.

A scenario file pins everything a mission run needs: the map source, the
current-field recipe, the obstacle roster, the rendezvous request, planner
and mission-loop knobs, and output options.  ``load_scenario`` resolves a
file into a ready :class:`Scenario`; ``build_scenario`` does the same for an
in-memory dict.  World construction is deterministic per scenario seed.

Schema (version 1), all sections required unless noted:

``map``
    ``kind`` one of ``open`` (all water), ``synthetic`` (water plus island
    shapes), ``raster`` (image file, clustered into water/forbidden),
    ``grid_json`` (previously saved grid).
``current``
    vortex count, nominal radius and strength, noise sigma range, layer
    structure.
``obstacles``
    counts per kind, nominal radius, walk step scale, noise widths, spawn
    box corners.
``rendezvous``
    start, target, requested time, tolerance, clearance threshold, water
    speed.
``planner``
    default algorithm, interior control point count, population,
    iteration budgets, samples per trajectory.
``mission``
    field update period, sim step, sensor range, arrival radius.
``runs`` (optional)
    default seed and run count for sweeps.
``output`` (optional)
    svg layer toggles.
``drops`` (optional)
    scripted obstacle injections: each entry adds one obstacle to the
    world at a fixed mission time, for replanning drills.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .cost import PenaltyWeights, RendezvousSpec, VehicleLimits
from .currents import CurrentField, make_random_field
from .envmap import GridMap, cluster_map, load_grid_json, read_pgm
from .errors import ConfigError, MapInputError
from .obstacles import Obstacle, ObstacleKind, ObstacleSet, spawn_quasi_static
from .seeding import TAG_OBSTACLES, substream

SCHEMA_VERSION = 1
PRESET_NAMES = ("scenario1", "scenario2", "scenario3", "scenario4")
SVG_LAYERS = ("map", "current", "obstacles", "path")

_TOP_KEYS = {
    "version",
    "name",
    "seed",
    "map",
    "current",
    "obstacles",
    "rendezvous",
    "planner",
    "mission",
    "runs",
    "output",
    "drops",
    "notes",
}


@dataclass(eq=False)
class Scenario:
    """A fully resolved mission configuration."""

    name: str
    seed: int
    grid: GridMap
    current: CurrentField
    obstacles: ObstacleSet
    spec: RendezvousSpec
    water_speed: float = 2.5
    algorithm: str = "pso"
    n_interior: int = 7
    population: int = 100
    iterations: int = 100
    replan_iterations: int = 40
    curve_samples: int = 100
    field_update_period: float = 450.0
    sim_step: float = 1.0
    sensor_range: float = 500.0
    arrival_radius: float = 10.0
    default_seed: int = 0
    default_runs: int = 30
    svg_layers: tuple[str, ...] = SVG_LAYERS
    drops: tuple[tuple[float, Obstacle], ...] = ()
    limits: VehicleLimits = field(default_factory=VehicleLimits)
    weights: PenaltyWeights = field(default_factory=PenaltyWeights)
    notes: str = ""

    def __post_init__(self) -> None:
        if self.n_interior < 1 or self.population < 1:
            raise ConfigError("scenario needs n_interior >= 1 and population >= 1")
        for label, value in (
            ("iterations", self.iterations),
            ("replan_iterations", self.replan_iterations),
            ("curve_samples", self.curve_samples),
        ):
            if value < 1:
                raise ConfigError(f"scenario {label} must be >= 1")
        for label, value in (
            ("field_update_period", self.field_update_period),
            ("sim_step", self.sim_step),
            ("sensor_range", self.sensor_range),
            ("arrival_radius", self.arrival_radius),
            ("water_speed", self.water_speed),
        ):
            if value <= 0:
                raise ConfigError(f"scenario {label} must be positive")
        unknown = set(self.svg_layers) - set(SVG_LAYERS)
        if unknown:
            raise ConfigError(f"unknown svg layers {sorted(unknown)}")
        for when, _ in self.drops:
            if when < 0:
                raise ConfigError("drop times must be non-negative")


# ---------------------------------------------------------------------------
# Schema helpers


def _section(doc: dict, key: str, allowed: set[str], required: set[str]) -> dict:
    if key not in doc:
        raise ConfigError(f"scenario is missing the '{key}' section")
    sec = doc[key]
    if not isinstance(sec, dict):
        raise ConfigError(f"scenario section '{key}' must be an object")
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in section '{key}'")
    missing = required - set(sec)
    if missing:
        raise ConfigError(f"section '{key}' is missing {sorted(missing)}")
    return sec


def _vector(raw, length: int, where: str) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.shape != (length,):
        raise ConfigError(f"{where} must be a {length}-vector, got {raw!r}")
    return arr


# ---------------------------------------------------------------------------
# Map builders


def _occupancy_with_islands(
    width: int, height: int, cell_size: float, origin: tuple[float, float], islands: list
) -> np.ndarray:
    occ = np.ones((height, width), dtype=bool)
    xs = origin[0] + (np.arange(width) + 0.5) * cell_size
    ys = origin[1] + (np.arange(height) + 0.5) * cell_size
    cx, cy = np.meshgrid(xs, ys)
    for i, shape in enumerate(islands):
        if not isinstance(shape, dict) or "kind" not in shape:
            raise ConfigError(f"island {i} must be an object with a 'kind'")
        kind = shape["kind"]
        if kind == "circle":
            center = _vector(shape.get("center"), 2, f"island {i} center")
            radius = float(shape.get("radius", 0.0))
            if radius <= 0:
                raise ConfigError(f"island {i} needs a positive radius")
            inside = (cx - center[0]) ** 2 + (cy - center[1]) ** 2 <= radius**2
        elif kind == "rect":
            lo = _vector(shape.get("min"), 2, f"island {i} min")
            hi = _vector(shape.get("max"), 2, f"island {i} max")
            if np.any(hi <= lo):
                raise ConfigError(f"island {i} needs max > min")
            inside = (cx >= lo[0]) & (cx <= hi[0]) & (cy >= lo[1]) & (cy <= hi[1])
        else:
            raise ConfigError(f"island {i} has unknown kind {kind!r}")
        occ &= ~inside
    return occ


def _build_grid(sec: dict, base_dir: str) -> GridMap:
    kind = sec.get("kind")
    if kind in ("open", "synthetic"):
        width = int(sec.get("width", 0))
        height = int(sec.get("height", 0))
        if width < 1 or height < 1:
            raise ConfigError("map width and height must be >= 1")
        cell = float(sec.get("cell_size", 10.0))
        origin = tuple(_vector(sec.get("origin", (0.0, 0.0)), 2, "map origin"))
        depth = float(sec.get("depth_limit", 100.0))
        islands = sec.get("islands", []) if kind == "synthetic" else []
        occ = _occupancy_with_islands(width, height, cell, origin, islands)
        return GridMap(occupancy=occ, cell_size=cell, origin=origin, depth_limit=depth)
    if kind == "raster":
        path = os.path.join(base_dir, sec.get("path", ""))
        raster = read_pgm(
            path,
            cell_size=float(sec.get("cell_size", 10.0)),
            origin=tuple(_vector(sec.get("origin", (0.0, 0.0)), 2, "map origin")),
        )
        water_seed = sec.get("water_seed")
        if water_seed is not None:
            water_seed = tuple(int(v) for v in water_seed)
        return cluster_map(
            raster,
            k=int(sec.get("k", 2)),
            seed=int(sec.get("cluster_seed", 0)),
            water_seed=water_seed,
            depth_limit=float(sec.get("depth_limit", 100.0)),
        )
    if kind == "grid_json":
        return load_grid_json(os.path.join(base_dir, sec.get("path", "")))
    raise ConfigError(f"unknown map kind {kind!r}")


_MAP_KEYS = {
    "kind",
    "width",
    "height",
    "cell_size",
    "origin",
    "depth_limit",
    "islands",
    "path",
    "k",
    "cluster_seed",
    "water_seed",
}


# ---------------------------------------------------------------------------
# Obstacle roster


def _spawn_roster(sec: dict, seed: int) -> ObstacleSet:
    counts = {
        ObstacleKind.QUASI_STATIC: int(sec.get("quasi_static", 0)),
        ObstacleKind.MOVING: int(sec.get("moving", 0)),
        ObstacleKind.DYNAMIC: int(sec.get("dynamic", 0)),
    }
    if any(c < 0 for c in counts.values()):
        raise ConfigError("obstacle counts must be non-negative")
    sigma1 = float(sec.get("sigma1", 30.0))
    sigma2 = float(sec.get("sigma2", 15.0))
    sigma3 = float(sec.get("sigma3", 0.5))
    nominal = float(sec.get("nominal_radius", 40.0))
    step_scale = float(sec.get("step_scale", 5.0))
    box = sec.get("spawn_box")
    if sum(counts.values()) == 0:
        return ObstacleSet(obstacles=(), sigma1=sigma1, sigma2=sigma2, sigma3=sigma3)
    if box is None:
        raise ConfigError("obstacle roster with positive counts needs a spawn_box")
    lo = _vector(box[0], 3, "spawn_box min")
    hi = _vector(box[1], 3, "spawn_box max")
    rng = substream(seed, TAG_OBSTACLES)
    placed: list[Obstacle] = []
    # Spawn order is fixed (quasi-static, moving, dynamic) so the draw
    # sequence, and therefore the roster, is reproducible per seed.
    for kind in (ObstacleKind.QUASI_STATIC, ObstacleKind.MOVING, ObstacleKind.DYNAMIC):
        for _ in range(counts[kind]):
            ob = spawn_quasi_static(lo, hi, rng, nominal, sigma1=sigma1, sigma2=sigma2)
            if kind is not ObstacleKind.QUASI_STATIC:
                ob = dataclasses.replace(ob, kind=kind, step_scale=step_scale)
            placed.append(ob)
    return ObstacleSet(obstacles=tuple(placed), sigma1=sigma1, sigma2=sigma2, sigma3=sigma3)


_OBSTACLE_KEYS = {
    "quasi_static",
    "moving",
    "dynamic",
    "nominal_radius",
    "step_scale",
    "sigma1",
    "sigma2",
    "sigma3",
    "spawn_box",
}

_KIND_NAMES = {k.value: k for k in ObstacleKind}


def _parse_drops(raw) -> tuple[tuple[float, Obstacle], ...]:
    if not isinstance(raw, list):
        raise ConfigError("'drops' must be a list")
    drops = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise ConfigError(f"drop {i} must be an object")
        unknown = set(entry) - {"time", "kind", "position", "radius", "uncertainty", "step_scale"}
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)} in drop {i}")
        kind = entry.get("kind", "moving")
        if kind not in _KIND_NAMES:
            raise ConfigError(f"drop {i} has unknown kind {kind!r}")
        ob = Obstacle(
            kind=_KIND_NAMES[kind],
            position=_vector(entry.get("position"), 3, f"drop {i} position"),
            radius=float(entry.get("radius", 40.0)),
            uncertainty=float(entry.get("uncertainty", 10.0)),
            step_scale=float(entry.get("step_scale", 5.0)),
        )
        drops.append((float(entry.get("time", 0.0)), ob))
    return tuple(drops)


# ---------------------------------------------------------------------------
# Scenario assembly


def build_scenario(doc: dict, base_dir: str = ".") -> Scenario:
    """Resolve a schema dict into a runnable :class:`Scenario`."""
    if not isinstance(doc, dict):
        raise ConfigError("scenario document must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    version = doc.get("version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported scenario version {version!r} (expected {SCHEMA_VERSION})")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise ConfigError("scenario needs a non-empty 'name'")
    seed = doc.get("seed")
    if not isinstance(seed, int):
        raise ConfigError("scenario needs an integer 'seed'")

    grid = _build_grid(_section(doc, "map", _MAP_KEYS, {"kind"}), base_dir)

    cur = _section(
        doc,
        "current",
        {
            "vortices",
            "extent",
            "radius",
            "strength",
            "sigma_range",
            "vertical_scale",
            "update_rate",
            "n_layers",
            "depth_extent",
        },
        {"vortices"},
    )
    current = make_random_field(
        seed,
        n_vortices=int(cur["vortices"]),
        extent=tuple(_vector(cur.get("extent", (0.0, 0.0, 3500.0, 3500.0)), 4, "current extent")),
        radius=float(cur.get("radius", 2.8)),
        strength=float(cur.get("strength", 12.0)),
        sigma_range=tuple(_vector(cur.get("sigma_range", (0.1, 0.8)), 2, "sigma_range")),
        vertical_scale=float(cur.get("vertical_scale", 0.1)),
        update_rate=float(cur.get("update_rate", 1.0)),
        n_layers=int(cur.get("n_layers", 5)),
        depth_extent=float(cur.get("depth_extent", grid.depth_limit)),
    )

    obstacles = _spawn_roster(_section(doc, "obstacles", _OBSTACLE_KEYS, set()), seed)

    rdv = _section(
        doc,
        "rendezvous",
        {"start", "target", "time", "tolerance", "clearance", "water_speed"},
        {"start", "target", "time", "tolerance", "clearance"},
    )
    spec = RendezvousSpec(
        start=_vector(rdv["start"], 3, "rendezvous start"),
        target=_vector(rdv["target"], 3, "rendezvous target"),
        rendezvous_time=float(rdv["time"]),
        time_tolerance=float(rdv["tolerance"]),
        clearance_threshold=float(rdv["clearance"]),
    )

    plan = _section(
        doc,
        "planner",
        {"algorithm", "control_points", "population", "iterations", "replan_iterations", "curve_samples"},
        set(),
    )
    mission = _section(
        doc,
        "mission",
        {"field_update_period", "sim_step", "sensor_range", "arrival_radius"},
        set(),
    )
    runs = _section(doc, "runs", {"seed", "count"}, set()) if "runs" in doc else {}
    output = _section(doc, "output", {"svg_layers"}, set()) if "output" in doc else {}
    layers = output.get("svg_layers", list(SVG_LAYERS))
    if not isinstance(layers, list) or not all(isinstance(s, str) for s in layers):
        raise ConfigError("output.svg_layers must be a list of strings")
    drops = _parse_drops(doc["drops"]) if "drops" in doc else ()

    return Scenario(
        name=name,
        seed=seed,
        grid=grid,
        current=current,
        obstacles=obstacles,
        spec=spec,
        water_speed=float(rdv.get("water_speed", 2.5)),
        algorithm=str(plan.get("algorithm", "pso")),
        n_interior=int(plan.get("control_points", 7)),
        population=int(plan.get("population", 100)),
        iterations=int(plan.get("iterations", 100)),
        replan_iterations=int(plan.get("replan_iterations", 40)),
        curve_samples=int(plan.get("curve_samples", 100)),
        field_update_period=float(mission.get("field_update_period", 450.0)),
        sim_step=float(mission.get("sim_step", 1.0)),
        sensor_range=float(mission.get("sensor_range", 500.0)),
        arrival_radius=float(mission.get("arrival_radius", 10.0)),
        default_seed=int(runs.get("seed", 0)),
        default_runs=int(runs.get("count", 30)),
        svg_layers=tuple(layers),
        drops=drops,
        notes=str(doc.get("notes", "")),
    )


def load_scenario(path: str) -> Scenario:
    """Read and resolve a scenario JSON file.

    Unreadable files raise MapInputError (missing, unparseable); schema and
    value problems raise ConfigError.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise MapInputError(f"cannot read scenario file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MapInputError(f"scenario file {path} is not valid JSON: {exc}") from exc
    return build_scenario(doc, base_dir=os.path.dirname(os.path.abspath(path)))


# ---------------------------------------------------------------------------
# Shipped presets


def _base_preset(name: str, seed: int, notes: str) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "name": name,
        "seed": seed,
        "map": {
            "kind": "open",
            "width": 350,
            "height": 350,
            "cell_size": 10.0,
            "origin": [0.0, 0.0],
            "depth_limit": 100.0,
        },
        "current": {
            "vortices": 50,
            "extent": [0.0, 0.0, 3500.0, 3500.0],
            "radius": 2.8,
            "strength": 12.0,
            "sigma_range": [0.1, 0.8],
            "vertical_scale": 0.1,
            "update_rate": 1.0,
            "n_layers": 5,
            "depth_extent": 100.0,
        },
        "obstacles": {
            "quasi_static": 0,
            "moving": 0,
            "dynamic": 0,
            "nominal_radius": 40.0,
            "step_scale": 5.0,
            "sigma1": 30.0,
            "sigma2": 15.0,
            "sigma3": 0.5,
            "spawn_box": [[700.0, 700.0, 0.0], [2900.0, 2900.0, 120.0]],
        },
        "rendezvous": {
            "start": [300.0, 300.0, 20.0],
            "target": [3300.0, 3300.0, 50.0],
            "time": 1800.0,
            "tolerance": 300.0,
            "clearance": 50.0,
            "water_speed": 2.5,
        },
        "planner": {
            "algorithm": "pso",
            "control_points": 7,
            "population": 100,
            "iterations": 100,
            "replan_iterations": 40,
            "curve_samples": 100,
        },
        "mission": {
            "field_update_period": 450.0,
            "sim_step": 1.0,
            "sensor_range": 500.0,
            "arrival_radius": 10.0,
        },
        "runs": {"seed": 0, "count": 30},
        "output": {"svg_layers": list(SVG_LAYERS)},
        "notes": notes,
    }


def preset_document(name: str) -> dict:
    """Schema dict for one of the shipped presets, by name."""
    if name == "scenario1":
        return _base_preset(
            "scenario1",
            101,
            "Open water with a random vortex field and no obstacles; the "
            "planner adapts to four field states per mission.",
        )
    if name == "scenario2":
        doc = _base_preset(
            "scenario2",
            102,
            "Vortex field plus uncertain static obstacles scattered across "
            "the transit corridor.",
        )
        doc["obstacles"]["quasi_static"] = 6
        return doc
    if name == "scenario3":
        doc = _base_preset(
            "scenario3",
            103,
            "Vortex field with uncertain static, moving, and dynamic "
            "obstacles; confidence spheres grow and drift between updates.",
        )
        doc["obstacles"]["quasi_static"] = 4
        doc["obstacles"]["moving"] = 2
        doc["obstacles"]["dynamic"] = 2
        return doc
    if name == "scenario4":
        doc = _base_preset(
            "scenario4",
            104,
            "Coastal chart with no-go landmasses, vortex field, and the full "
            "obstacle mix; the hardest shipped setting.",
        )
        doc["map"] = {
            "kind": "synthetic",
            "width": 350,
            "height": 350,
            "cell_size": 10.0,
            "origin": [0.0, 0.0],
            "depth_limit": 100.0,
            "islands": [
                {"kind": "circle", "center": [1750.0, 1430.0], "radius": 250.0},
                {"kind": "circle", "center": [900.0, 2300.0], "radius": 220.0},
                {"kind": "circle", "center": [2650.0, 2100.0], "radius": 200.0},
                {"kind": "rect", "min": [0.0, 3200.0], "max": [700.0, 3500.0]},
                {"kind": "rect", "min": [3100.0, 0.0], "max": [3500.0, 400.0]},
            ],
        }
        doc["obstacles"]["quasi_static"] = 4
        doc["obstacles"]["moving"] = 2
        doc["obstacles"]["dynamic"] = 2
        return doc
    raise ConfigError(f"unknown preset {name!r} (have {', '.join(PRESET_NAMES)})")


def load_preset(name: str) -> Scenario:
    """Build one of the shipped presets without touching the filesystem."""
    return build_scenario(preset_document(name))


def write_presets(directory: str) -> list[str]:
    """Write every preset as JSON into ``directory``; returns the paths."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for name in PRESET_NAMES:
        path = os.path.join(directory, f"{name}.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(preset_document(name), fh, indent=2, sort_keys=False)
            fh.write("\n")
        paths.append(path)
    return paths
