"""Deterministic SVG rendering of maps, currents, obstacles, and paths.

Top-down 2-D projection in world coordinates (metres), north up.  Depth is
shown through per-segment line shading: shallow path segments draw light,
deep ones dark.  Output is a pure function of the inputs so artifacts are
byte-identical across runs; every numeric attribute is formatted with a
fixed precision and no timestamps or ids are embedded.
"""

from __future__ import annotations

import numpy as np

from .currents import CurrentField, velocity_3d_batch
from .envmap import GridMap
from .environment import EnvironmentSnapshot
from .errors import ConfigError
from .obstacles import ObstacleSet
from .spline import Trajectory

WATER_FILL = "#dbeaf4"
LAND_FILL = "#c9b99a"
CURRENT_STROKE = "#6b93b8"
OBSTACLE_FILL = "#b05050"
CONFIDENCE_STROKE = "#4e8a5a"
HISTORY_STROKE = "#9aa3ab"
START_FILL = "#cc3333"
TARGET_FILL = "#e0b32a"

# depth shading endpoints for the active path
_SHALLOW = (66, 135, 245)
_DEEP = (10, 20, 80)


def _fmt(value: float) -> str:
    return f"{value:.2f}".rstrip("0").rstrip(".")


def _depth_color(z: float, depth_limit: float) -> str:
    f = 0.0 if depth_limit <= 0 else min(max(z / depth_limit, 0.0), 1.0)
    rgb = tuple(round(a + (b - a) * f) for a, b in zip(_SHALLOW, _DEEP))
    return f"#{rgb[0]:02x}{rgb[1]:02x}{rgb[2]:02x}"


class _Scene:
    """Collects SVG elements in world coordinates with a flipped y axis."""

    def __init__(self, grid: GridMap):
        h, w = grid.occupancy.shape
        self.x0, self.y0 = grid.origin
        self.width = w * grid.cell_size
        self.height = h * grid.cell_size
        self.parts: list[str] = []

    def sx(self, x: float) -> str:
        return _fmt(x - self.x0)

    def sy(self, y: float) -> str:
        return _fmt(self.y0 + self.height - y)

    def add(self, element: str) -> None:
        self.parts.append(element)

    def document(self) -> str:
        head = (
            '<svg xmlns="http://www.w3.org/2000/svg" '
            f'viewBox="0 0 {_fmt(self.width)} {_fmt(self.height)}" '
            f'width="{_fmt(self.width)}" height="{_fmt(self.height)}">'
        )
        return "\n".join([head, *self.parts, "</svg>"]) + "\n"


def _render_map(scene: _Scene, grid: GridMap) -> None:
    scene.add(f'<g id="map"><rect x="0" y="0" width="{_fmt(scene.width)}" '
              f'height="{_fmt(scene.height)}" fill="{WATER_FILL}"/>')
    occ = grid.occupancy
    cell = grid.cell_size
    # merge runs of forbidden cells per row to keep the file small
    for row in range(occ.shape[0]):
        forbidden = ~occ[row]
        if not forbidden.any():
            continue
        edges = np.diff(np.concatenate([[0], forbidden.astype(int), [0]]))
        starts = np.nonzero(edges == 1)[0]
        ends = np.nonzero(edges == -1)[0]
        y_world = grid.origin[1] + (row + 1) * cell
        for a, b in zip(starts, ends):
            scene.add(
                f'<rect x="{scene.sx(grid.origin[0] + a * cell)}" '
                f'y="{scene.sy(y_world)}" '
                f'width="{_fmt((b - a) * cell)}" height="{_fmt(cell)}" '
                f'fill="{LAND_FILL}"/>'
            )
    scene.add("</g>")


def _render_current(scene: _Scene, grid: GridMap, current: CurrentField, arrows: int) -> None:
    h, w = grid.occupancy.shape
    cell = grid.cell_size
    step = max(1, max(h, w) // arrows)
    rows = np.arange(step // 2, h, step)
    cols = np.arange(step // 2, w, step)
    cc, rr = np.meshgrid(cols, rows)
    xs = grid.origin[0] + (cc.ravel() + 0.5) * cell
    ys = grid.origin[1] + (rr.ravel() + 0.5) * cell
    pts = np.column_stack([xs, ys, np.zeros_like(xs)])
    vel = velocity_3d_batch(current, pts)[:, :2]
    mags = np.linalg.norm(vel, axis=1)
    top = mags.max()
    if top <= 0.0:
        scene.add('<g id="current"></g>')
        return
    scale = 0.45 * step * cell / top
    scene.add(f'<g id="current" stroke="{CURRENT_STROKE}" stroke-width="{_fmt(0.15 * cell)}">')
    for (x, y), v in zip(np.column_stack([xs, ys]), vel):
        tip = (x + v[0] * scale, y + v[1] * scale)
        scene.add(
            f'<line x1="{scene.sx(x)}" y1="{scene.sy(y)}" '
            f'x2="{scene.sx(tip[0])}" y2="{scene.sy(tip[1])}"/>'
        )
        scene.add(
            f'<circle cx="{scene.sx(x)}" cy="{scene.sy(y)}" '
            f'r="{_fmt(0.12 * cell)}" fill="{CURRENT_STROKE}" stroke="none"/>'
        )
    scene.add("</g>")


def _render_obstacles(scene: _Scene, obstacles: ObstacleSet) -> None:
    scene.add('<g id="obstacles">')
    for ob in obstacles.obstacles:
        x, y = ob.position[0], ob.position[1]
        scene.add(
            f'<circle cx="{scene.sx(x)}" cy="{scene.sy(y)}" r="{_fmt(ob.radius)}" '
            f'fill="{OBSTACLE_FILL}" fill-opacity="0.65" stroke="none"/>'
        )
        scene.add(
            f'<circle cx="{scene.sx(x)}" cy="{scene.sy(y)}" '
            f'r="{_fmt(obstacles.confidence_radius(ob))}" fill="none" '
            f'stroke="{CONFIDENCE_STROKE}" stroke-width="2" stroke-dasharray="6 4"/>'
        )
    scene.add("</g>")


def _render_path(
    scene: _Scene, traj: Trajectory, depth_limit: float, active: bool, stroke_width: float
) -> None:
    pts = traj.positions
    if not active:
        coords = " ".join(f"{scene.sx(p[0])},{scene.sy(p[1])}" for p in pts)
        scene.add(
            f'<polyline points="{coords}" fill="none" stroke="{HISTORY_STROKE}" '
            f'stroke-width="{_fmt(stroke_width)}" stroke-opacity="0.8"/>'
        )
        return
    for i in range(len(pts) - 1):
        z_mid = 0.5 * (pts[i, 2] + pts[i + 1, 2])
        scene.add(
            f'<line x1="{scene.sx(pts[i, 0])}" y1="{scene.sy(pts[i, 1])}" '
            f'x2="{scene.sx(pts[i + 1, 0])}" y2="{scene.sy(pts[i + 1, 1])}" '
            f'stroke="{_depth_color(z_mid, depth_limit)}" '
            f'stroke-width="{_fmt(stroke_width)}" stroke-linecap="round"/>'
        )


def _render_markers(scene: _Scene, start: np.ndarray, target: np.ndarray, size: float) -> None:
    scene.add(
        f'<g id="markers"><circle cx="{scene.sx(start[0])}" cy="{scene.sy(start[1])}" '
        f'r="{_fmt(size)}" fill="{START_FILL}"/>'
    )
    half = size
    scene.add(
        f'<rect x="{_fmt(float(scene.sx(target[0])) - half)}" '
        f'y="{_fmt(float(scene.sy(target[1])) - half)}" '
        f'width="{_fmt(2 * half)}" height="{_fmt(2 * half)}" fill="{TARGET_FILL}"/></g>'
    )


def svg_scene(
    env: EnvironmentSnapshot,
    paths: list[Trajectory] | tuple[Trajectory, ...] = (),
    layers: tuple[str, ...] = ("map", "current", "obstacles", "path"),
    start: np.ndarray | None = None,
    target: np.ndarray | None = None,
    arrows: int = 24,
) -> str:
    """Render one world state and any number of paths; the last path is the
    active plan (depth-shaded, thick), earlier ones draw as thin history
    lines.  ``layers`` toggles which groups appear."""
    known = {"map", "current", "obstacles", "path"}
    unknown = set(layers) - known
    if unknown:
        raise ConfigError(f"unknown svg layers {sorted(unknown)}")
    scene = _Scene(env.grid)
    cell = env.grid.cell_size
    if "map" in layers:
        _render_map(scene, env.grid)
    if "current" in layers:
        _render_current(scene, env.grid, env.current, arrows)
    if "obstacles" in layers:
        _render_obstacles(scene, env.obstacles)
    if "path" in layers and paths:
        scene.add('<g id="path">')
        for traj in paths[:-1]:
            _render_path(scene, traj, env.grid.depth_limit, False, 0.5 * cell)
        _render_path(scene, paths[-1], env.grid.depth_limit, True, 0.8 * cell)
        scene.add("</g>")
    if start is not None and target is not None:
        _render_markers(scene, np.asarray(start), np.asarray(target), 1.2 * cell)
    return scene.document()


def mission_svgs(log, scenario) -> list[tuple[str, str]]:
    """One SVG per adopted plan, against the world state at its trigger time.

    Earlier plans stay visible as thin history lines, mirroring how refined
    paths overlay superseded ones.
    """
    stamps = [snap.timestamp for snap in log.snapshots]
    out = []
    for k, plan in enumerate(log.plans):
        idx = 0
        for j, ts in enumerate(stamps):
            if ts <= plan.time:
                idx = j
        svg = svg_scene(
            log.snapshots[idx],
            paths=[p.trajectory for p in log.plans[: k + 1]],
            layers=tuple(scenario.svg_layers),
            start=scenario.spec.start,
            target=scenario.spec.target,
        )
        out.append((f"plan{k:02d}_{plan.trigger}", svg))
    return out
