"""Uncertain obstacle models and confidence-sphere clearance.

Three behaviors share one record type:

* quasi-static: placed once inside the start/destination box with a radius
  drawn around a nominal size; never moves afterwards.
* moving: random-walks with a uniform step magnitude and a fair sign per
  axis.
* dynamic: random-walks with Gaussian steps and additionally grows or
  shrinks its radius through a linear recursion driven by the local current
  speed.

Clearance to an obstacle is measured to its confidence sphere, whose radius
is the obstacle radius plus ``confidence_multiplier`` times the radius
uncertainty.  All step functions are pure: they consume draws from a caller
supplied generator and return new records.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace

import numpy as np

from .currents import CurrentField, velocity_3d
from .errors import ConfigError, UnplaceableObstacleError

__all__ = [
    "ObstacleKind",
    "Obstacle",
    "ObstacleSet",
    "spawn_quasi_static",
    "step_moving",
    "step_dynamic",
    "step_set",
    "radius_recursion",
    "clearance",
    "clearances",
    "obstacle_set_to_json",
    "obstacle_set_from_json",
]

_SPAWN_RETRY_CAP = 100
_DYNAMIC_SPEED_SIGMA = 0.3


class ObstacleKind(str, enum.Enum):
    QUASI_STATIC = "quasi_static"
    MOVING = "moving"
    DYNAMIC = "dynamic"


@dataclass(eq=False)
class Obstacle:
    """One obstacle: 3-D position, effective radius and radius uncertainty.

    ``step_scale`` is the nominal per-axis displacement magnitude used by the
    moving and dynamic walks.  Dynamic obstacles carry ``radius_state``
    (radius, radius rate, bias); their effective radius is the first entry
    clamped at zero.
    """

    kind: ObstacleKind
    position: np.ndarray
    radius: float
    uncertainty: float
    step_scale: float = 0.0
    radius_state: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.position = np.asarray(self.position, dtype=float)
        if self.position.shape != (3,):
            raise ConfigError("obstacle position must be a 3-vector")
        if self.radius < 0 or self.uncertainty < 0:
            raise ConfigError("radius and uncertainty must be non-negative")
        if self.kind is ObstacleKind.DYNAMIC:
            if self.radius_state is None:
                self.radius_state = np.array([self.radius, 0.0, 0.0])
            self.radius_state = np.asarray(self.radius_state, dtype=float)
            if self.radius_state.shape != (3,):
                raise ConfigError("radius_state must be a 3-vector")


@dataclass(eq=False)
class ObstacleSet:
    """A collection of obstacles plus the noise widths shared by spawning.

    sigma1: position perturbation of quasi-static placement.
    sigma2: upper bound of the uniform radius-uncertainty draw.
    sigma3: radius-rate noise of the dynamic recursion.
    """

    obstacles: tuple[Obstacle, ...] = ()
    sigma1: float = 30.0
    sigma2: float = 15.0
    sigma3: float = 0.5
    confidence_multiplier: float = 2.0

    def __post_init__(self) -> None:
        self.obstacles = tuple(self.obstacles)

    def confidence_radius(self, obstacle: Obstacle) -> float:
        return obstacle.radius + self.confidence_multiplier * obstacle.uncertainty


def spawn_quasi_static(
    start: np.ndarray,
    dest: np.ndarray,
    rng: np.random.Generator,
    nominal_radius: float,
    sigma1: float = 30.0,
    sigma2: float = 15.0,
) -> Obstacle:
    """Place a quasi-static obstacle inside the start/destination box.

    Per attempt the draws are, in order: radius uncertainty ~ U(0, sigma2),
    radius = |N(nominal_radius, uncertainty)|, one uniform per non-degenerate
    axis for the center, then three N(0, sigma1) position perturbations.
    Axes where start and dest coincide pin the center at the shared
    coordinate.  An axis with a positive extent not exceeding twice the drawn
    radius forces a redraw; after the retry cap the placement fails.
    """
    start = np.asarray(start, dtype=float)
    dest = np.asarray(dest, dtype=float)
    lo = np.minimum(start, dest)
    hi = np.maximum(start, dest)
    for _ in range(_SPAWN_RETRY_CAP):
        uncertainty = float(rng.uniform(0.0, sigma2))
        radius = float(abs(nominal_radius + uncertainty * rng.standard_normal()))
        center = np.empty(3)
        degenerate = False
        for axis in range(3):
            extent = hi[axis] - lo[axis]
            if extent == 0.0:
                center[axis] = lo[axis]
            elif extent <= 2.0 * radius:
                degenerate = True
                break
            else:
                center[axis] = rng.uniform(lo[axis] + radius, hi[axis] - radius)
        if degenerate:
            continue
        center = center + sigma1 * rng.standard_normal(3)
        return Obstacle(
            kind=ObstacleKind.QUASI_STATIC,
            position=center,
            radius=radius,
            uncertainty=uncertainty,
        )
    raise UnplaceableObstacleError(
        f"no placement with nominal radius {nominal_radius} fits the box {lo} .. {hi}"
    )


def step_moving(obstacle: Obstacle, rng: np.random.Generator) -> Obstacle:
    """One uniform random-walk step; returns a new obstacle.

    Draw order: three step magnitudes ~ U(lo, hi) with (lo, hi) the sorted
    pair (step_scale, uncertainty), then three fair signs.  With both scale
    and uncertainty zero the position is unchanged.
    """
    lo = min(obstacle.step_scale, obstacle.uncertainty)
    hi = max(obstacle.step_scale, obstacle.uncertainty)
    magnitudes = rng.uniform(lo, hi, size=3)
    signs = rng.integers(0, 2, size=3) * 2 - 1
    return replace(obstacle, position=obstacle.position + signs * magnitudes)


def radius_recursion(
    state: np.ndarray, growth_rate: float, noise: float, uncertainty: float
) -> np.ndarray:
    """Linear radius-state update (radius, rate, bias).

    radius  += growth_rate * rate
    rate    += noise
    bias    += noise + growth_rate * uncertainty
    """
    r, rate, bias = np.asarray(state, dtype=float)
    return np.array(
        [r + growth_rate * rate, rate + noise, bias + noise + growth_rate * uncertainty]
    )


def step_dynamic(
    obstacle: Obstacle,
    rng: np.random.Generator,
    current_speed: float,
    sigma3: float = 0.5,
) -> Obstacle:
    """One dynamic step: Gaussian walk plus radius-state recursion.

    The growth rate is the local current speed scaled by |N(0, 0.3)|.  Draw
    order: one standard normal for the speed scale, one for the radius-rate
    noise, three for the per-axis displacements, then three fair signs.
    """
    if obstacle.radius_state is None:
        raise ConfigError("dynamic step requires radius_state")
    growth_rate = float(current_speed * abs(_DYNAMIC_SPEED_SIGMA * rng.standard_normal()))
    noise = float(sigma3 * rng.standard_normal())
    displacement = obstacle.step_scale + obstacle.uncertainty * rng.standard_normal(3)
    signs = rng.integers(0, 2, size=3) * 2 - 1
    new_state = radius_recursion(obstacle.radius_state, growth_rate, noise, obstacle.uncertainty)
    return replace(
        obstacle,
        position=obstacle.position + signs * displacement,
        radius=float(max(new_state[0], 0.0)),
        radius_state=new_state,
    )


def step_set(
    obstacle_set: ObstacleSet, rng: np.random.Generator, current: CurrentField | None = None
) -> ObstacleSet:
    """Step every obstacle in list order; quasi-static entries pass through.

    Dynamic obstacles read the current speed at their own position from
    ``current`` (still water when None).
    """
    stepped = []
    for ob in obstacle_set.obstacles:
        if ob.kind is ObstacleKind.MOVING:
            stepped.append(step_moving(ob, rng))
        elif ob.kind is ObstacleKind.DYNAMIC:
            speed = velocity_3d(current, ob.position).magnitude if current is not None else 0.0
            stepped.append(step_dynamic(ob, rng, speed, obstacle_set.sigma3))
        else:
            stepped.append(ob)
    return replace(obstacle_set, obstacles=tuple(stepped))


def clearance(obstacle_set: ObstacleSet, p: np.ndarray) -> float:
    """Signed distance from p to the nearest confidence sphere.

    Positive outside every sphere, negative inside one, +inf for an empty
    set.  1-Lipschitz in p.
    """
    return float(clearances(obstacle_set, np.asarray(p, dtype=float)[None, :])[0])


def clearances(obstacle_set: ObstacleSet, pts: np.ndarray) -> np.ndarray:
    """Vectorized clearance for an (N, 3) point array."""
    pts = np.asarray(pts, dtype=float)
    if not obstacle_set.obstacles:
        return np.full(len(pts), np.inf)
    centers = np.array([ob.position for ob in obstacle_set.obstacles])
    margins = np.array([obstacle_set.confidence_radius(ob) for ob in obstacle_set.obstacles])
    d = np.linalg.norm(pts[:, None, :] - centers[None, :, :], axis=2)
    return (d - margins[None, :]).min(axis=1)


# ---------------------------------------------------------------------------
# I/O


def obstacle_set_to_json(obstacle_set: ObstacleSet) -> dict:
    return {
        "sigma1": obstacle_set.sigma1,
        "sigma2": obstacle_set.sigma2,
        "sigma3": obstacle_set.sigma3,
        "confidence_multiplier": obstacle_set.confidence_multiplier,
        "obstacles": [
            {
                "kind": ob.kind.value,
                "position": ob.position.tolist(),
                "radius": ob.radius,
                "uncertainty": ob.uncertainty,
                "step_scale": ob.step_scale,
                "radius_state": None if ob.radius_state is None else ob.radius_state.tolist(),
            }
            for ob in obstacle_set.obstacles
        ],
    }


def obstacle_set_from_json(doc: dict) -> ObstacleSet:
    try:
        obstacles = [
            Obstacle(
                kind=ObstacleKind(item["kind"]),
                position=np.array(item["position"], dtype=float),
                radius=float(item["radius"]),
                uncertainty=float(item["uncertainty"]),
                step_scale=float(item.get("step_scale", 0.0)),
                radius_state=None
                if item.get("radius_state") is None
                else np.array(item["radius_state"], dtype=float),
            )
            for item in doc["obstacles"]
        ]
        return ObstacleSet(
            obstacles=tuple(obstacles),
            sigma1=float(doc["sigma1"]),
            sigma2=float(doc["sigma2"]),
            sigma3=float(doc["sigma3"]),
            confidence_multiplier=float(doc["confidence_multiplier"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed obstacle JSON: {exc}") from None


def save_obstacles_json(obstacle_set: ObstacleSet, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(obstacle_set_to_json(obstacle_set), fh)


def load_obstacles_json(path: str) -> ObstacleSet:
    with open(path) as fh:
        return obstacle_set_from_json(json.load(fh))
