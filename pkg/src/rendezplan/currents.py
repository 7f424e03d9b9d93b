"""Layered ocean-current field built from superposed viscous vortices.

Each vortex induces a divergence-free azimuthal flow whose speed rises from
zero at the core center, peaks near the core radius and decays like 1/r far
away.  Vertical flow is a Gaussian bump over each core.  The field evolves
in discrete update steps by adding seeded Gaussian noise to every vortex
center, radius and strength, and the water column is split into equal depth
bands, each holding a progressively further-evolved copy of the surface
vortices.

All randomness derives from the field's own seed, so evolution is a pure
function: ``evolve(field)`` returns a new field and never mutates its input.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .seeding import TAG_CURRENT, substream

__all__ = [
    "Vortex",
    "UniformCurrent",
    "CurrentField",
    "CurrentSample",
    "velocity_2d",
    "velocity_3d",
    "velocity_3d_batch",
    "vorticity",
    "evolve",
    "evolution_rng",
    "make_random_field",
    "field_to_json",
    "field_from_json",
    "export_velocity_csv",
]

_EVOLVE_TAG = 101
_LAYER_TAG = 102

MIN_RADIUS = 0.1


@dataclass(frozen=True)
class UniformCurrent:
    """Spatially constant current; handy for tests and closed-form checks."""

    components: tuple[float, float, float]


@dataclass(frozen=True)
class Vortex:
    """One vortex core: center (x, y) in metres, radius > 0, signed strength."""

    center: tuple[float, float]
    radius: float
    strength: float

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ConfigError(f"vortex radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class CurrentSample:
    """A 3-D current measurement with its polar decomposition.

    The components satisfy u = |V| cos(theta) cos(psi),
    v = |V| cos(theta) sin(psi), w = |V| sin(theta).
    """

    u: float
    v: float
    w: float
    magnitude: float
    psi: float
    theta: float

    @classmethod
    def from_components(cls, u: float, v: float, w: float) -> "CurrentSample":
        mag = float(np.sqrt(u * u + v * v + w * w))
        if mag == 0.0:
            return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        psi = float(np.arctan2(v, u))
        theta = float(np.arcsin(np.clip(w / mag, -1.0, 1.0)))
        return cls(float(u), float(v), float(w), mag, psi, theta)


class CurrentField:
    """Immutable snapshot of the vortex field plus its evolution parameters.

    Parameters
    ----------
    vortices : iterable of Vortex describing the surface (band 0) layer.
    vertical_scale : scale of the vertical Gaussian-bump flow.
    update_rate : multiplier on every evolution noise draw.
    sigmas : (sigma_cx, sigma_cy, sigma_radius, sigma_strength) noise widths.
    seed : entropy source for all evolution and layer construction.
    step : how many update steps this field is from its seed state.
    update_period : nominal seconds between field updates (metadata).
    n_layers : number of equal depth bands.
    depth_extent : total water-column depth covered by the bands, metres.
    """

    def __init__(
        self,
        vortices,
        vertical_scale: float = 0.1,
        update_rate: float = 1.0,
        sigmas: tuple[float, float, float, float] = (0.45, 0.45, 0.45, 0.45),
        seed: int = 0,
        step: int = 0,
        update_period: float = 4.0,
        n_layers: int = 5,
        depth_extent: float = 1000.0,
    ):
        self.vortices = tuple(vortices)
        self.vertical_scale = float(vertical_scale)
        self.update_rate = float(update_rate)
        self.sigmas = tuple(float(s) for s in sigmas)
        self.seed = int(seed)
        self.step = int(step)
        self.update_period = float(update_period)
        self.n_layers = int(n_layers)
        self.depth_extent = float(depth_extent)
        if len(self.sigmas) != 4:
            raise ConfigError("sigmas must have 4 entries")
        if self.n_layers < 1 or self.depth_extent <= 0:
            raise ConfigError("need n_layers >= 1 and positive depth_extent")
        self._arrays = _pack(self.vortices)
        self._layers: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {0: self._arrays}

    def layer_arrays(self, band: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(centers, radii, strengths) for a depth band, built on demand.

        Band b is the band-0 vortices advanced b noise steps on the layer
        substream, so two fields with equal seed and state agree bitwise.
        """
        if band not in self._layers:
            prev = self.layer_arrays(band - 1)
            rng = substream(self.seed, TAG_CURRENT, _LAYER_TAG, band)
            self._layers[band] = _perturb(prev, rng, self.update_rate, self.sigmas)
        return self._layers[band]

    def band_of(self, z: float) -> int:
        """Depth band containing z; out-of-column depths clamp to the nearest band."""
        thickness = self.depth_extent / self.n_layers
        return int(np.clip(np.floor(z / thickness), 0, self.n_layers - 1))


def _pack(vortices) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if len(vortices) == 0:
        return np.zeros((0, 2)), np.zeros(0), np.zeros(0)
    centers = np.array([v.center for v in vortices], dtype=float)
    radii = np.array([v.radius for v in vortices], dtype=float)
    strengths = np.array([v.strength for v in vortices], dtype=float)
    return centers, radii, strengths


def _unpack(arrays) -> tuple[Vortex, ...]:
    centers, radii, strengths = arrays
    return tuple(
        Vortex(center=(float(c[0]), float(c[1])), radius=float(r), strength=float(s))
        for c, r, s in zip(centers, radii, strengths)
    )


def _perturb(arrays, rng: np.random.Generator, update_rate: float, sigmas) -> tuple:
    """One noise step: draw (n, 4) standard normals in column order
    [center_x, center_y, radius, strength], scale by update_rate * sigma."""
    centers, radii, strengths = arrays
    z = rng.standard_normal((len(radii), 4))
    new_centers = centers + update_rate * np.array(sigmas[:2]) * z[:, :2]
    new_radii = np.maximum(radii + update_rate * sigmas[2] * z[:, 2], MIN_RADIUS)
    new_strengths = strengths + update_rate * sigmas[3] * z[:, 3]
    return new_centers, new_radii, new_strengths


def _velocity_from_arrays(arrays, pts: np.ndarray) -> np.ndarray:
    """Summed horizontal vortex velocities at (N, 2) points -> (N, 2)."""
    centers, radii, strengths = arrays
    if len(radii) == 0:
        return np.zeros_like(pts)
    dx = pts[:, None, 0] - centers[None, :, 0]
    dy = pts[:, None, 1] - centers[None, :, 1]
    r2 = dx * dx + dy * dy
    ell2 = radii * radii
    safe_r2 = np.where(r2 > 0.0, r2, 1.0)
    # (1 - exp(-r^2/ell^2)) / r^2 with its removable singularity at r = 0
    f = np.where(r2 > 0.0, -np.expm1(-r2 / ell2) / safe_r2, 1.0 / ell2)
    coef = strengths / (2.0 * np.pi)
    u = -(coef * dy * f).sum(axis=1)
    v = (coef * dx * f).sum(axis=1)
    return np.stack([u, v], axis=1)


def _vertical_from_arrays(arrays, pts: np.ndarray, vertical_scale: float) -> np.ndarray:
    """Summed vertical Gaussian-bump flow at (N, 2) points -> (N,)."""
    centers, radii, strengths = arrays
    if len(radii) == 0:
        return np.zeros(len(pts))
    dx = pts[:, None, 0] - centers[None, :, 0]
    dy = pts[:, None, 1] - centers[None, :, 1]
    r2 = dx * dx + dy * dy
    bumps = strengths / (2.0 * np.pi * radii) * np.exp(-r2 / (2.0 * radii))
    return vertical_scale * bumps.sum(axis=1)


def velocity_2d(field: CurrentField, p: np.ndarray) -> np.ndarray:
    """Horizontal current (u, v) of the surface layer at p.

    Accepts a single (2,) point or an (N, 2) batch.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim == 1:
        return _velocity_from_arrays(field._arrays, p[None, :])[0]
    return _velocity_from_arrays(field._arrays, p)


def vorticity(field: CurrentField, p: np.ndarray) -> float:
    """Signed scalar vorticity of the surface layer at a (2,) point."""
    centers, radii, strengths = field._arrays
    if len(radii) == 0:
        return 0.0
    d2 = ((np.asarray(p, dtype=float) - centers) ** 2).sum(axis=1)
    ell2 = radii * radii
    return float((strengths / (np.pi * ell2) * np.exp(-d2 / ell2)).sum())


def velocity_3d(field: CurrentField, p: np.ndarray) -> CurrentSample:
    """Full 3-D current sample at (x, y, z), using the depth band holding z."""
    p = np.asarray(p, dtype=float)
    arrays = field.layer_arrays(field.band_of(p[2]))
    uv = _velocity_from_arrays(arrays, p[None, :2])[0]
    w = _vertical_from_arrays(arrays, p[None, :2], field.vertical_scale)[0]
    return CurrentSample.from_components(uv[0], uv[1], w)


def velocity_3d_batch(field: CurrentField, pts: np.ndarray) -> np.ndarray:
    """(N, 3) current vectors for (N, 3) points, grouping queries by depth band."""
    pts = np.asarray(pts, dtype=float)
    out = np.empty((len(pts), 3))
    thickness = field.depth_extent / field.n_layers
    bands = np.clip(np.floor(pts[:, 2] / thickness).astype(int), 0, field.n_layers - 1)
    for band in np.unique(bands):
        mask = bands == band
        arrays = field.layer_arrays(int(band))
        out[mask, :2] = _velocity_from_arrays(arrays, pts[mask, :2])
        out[mask, 2] = _vertical_from_arrays(arrays, pts[mask, :2], field.vertical_scale)
    return out


def evolution_rng(seed: int, step: int) -> np.random.Generator:
    """The generator consumed by the evolution step of a field at ``step``.

    Public so tests and tools can replay the exact draw sequence: one
    (n_vortices, 4) standard-normal block in column order
    [center_x, center_y, radius, strength].
    """
    return substream(seed, TAG_CURRENT, _EVOLVE_TAG, step)


def evolve(field: CurrentField) -> CurrentField:
    """Advance the field one update step; returns a new field.

    Each vortex receives independent Gaussian perturbations scaled by
    update_rate and the per-parameter sigmas; radii clamp at MIN_RADIUS.
    With zero sigmas or zero update_rate the vortices are unchanged (the
    step counter still advances).
    """
    rng = evolution_rng(field.seed, field.step)
    arrays = _perturb(field._arrays, rng, field.update_rate, field.sigmas)
    return CurrentField(
        vortices=_unpack(arrays),
        vertical_scale=field.vertical_scale,
        update_rate=field.update_rate,
        sigmas=field.sigmas,
        seed=field.seed,
        step=field.step + 1,
        update_period=field.update_period,
        n_layers=field.n_layers,
        depth_extent=field.depth_extent,
    )


def make_random_field(
    seed: int,
    n_vortices: int = 50,
    extent: tuple[float, float, float, float] = (0.0, 0.0, 3500.0, 3500.0),
    radius: float = 2.8,
    strength: float = 12.0,
    sigma_range: tuple[float, float] = (0.1, 0.8),
    **kwargs,
) -> CurrentField:
    """Scatter vortices uniformly over a rectangle and draw noise sigmas.

    Every vortex gets the same nominal radius and strength; the four noise
    sigmas are drawn uniformly from sigma_range.  Extra keyword arguments
    pass through to :class:`CurrentField`.
    """
    rng = substream(seed, TAG_CURRENT)
    xmin, ymin, xmax, ymax = extent
    xy = rng.uniform([xmin, ymin], [xmax, ymax], size=(n_vortices, 2))
    vortices = [Vortex(center=(float(x), float(y)), radius=radius, strength=strength) for x, y in xy]
    sigmas = tuple(rng.uniform(*sigma_range, size=4))
    return CurrentField(vortices=vortices, sigmas=sigmas, seed=seed, **kwargs)


# ---------------------------------------------------------------------------
# I/O


def field_to_json(f: CurrentField) -> dict:
    return {
        "vortices": [
            {"center": list(v.center), "radius": v.radius, "strength": v.strength}
            for v in f.vortices
        ],
        "vertical_scale": f.vertical_scale,
        "update_rate": f.update_rate,
        "sigmas": list(f.sigmas),
        "seed": f.seed,
        "step": f.step,
        "update_period": f.update_period,
        "n_layers": f.n_layers,
        "depth_extent": f.depth_extent,
    }


def field_from_json(doc: dict) -> CurrentField:
    try:
        vortices = [
            Vortex(center=tuple(v["center"]), radius=v["radius"], strength=v["strength"])
            for v in doc["vortices"]
        ]
        return CurrentField(
            vortices=vortices,
            vertical_scale=doc["vertical_scale"],
            update_rate=doc["update_rate"],
            sigmas=tuple(doc["sigmas"]),
            seed=doc["seed"],
            step=doc["step"],
            update_period=doc["update_period"],
            n_layers=doc["n_layers"],
            depth_extent=doc["depth_extent"],
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed current-field JSON: {exc}") from None


def save_field_json(f: CurrentField, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(field_to_json(f), fh)


def load_field_json(path: str) -> CurrentField:
    with open(path) as fh:
        return field_from_json(json.load(fh))


def export_velocity_csv(
    f: CurrentField,
    path: str,
    extent: tuple[float, float, float, float],
    spacing: float,
) -> None:
    """Sample the surface layer on a regular grid and write x,y,u_c,v_c rows."""
    xmin, ymin, xmax, ymax = extent
    xs = np.arange(xmin, xmax + 0.5 * spacing, spacing)
    ys = np.arange(ymin, ymax + 0.5 * spacing, spacing)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    uv = velocity_2d(f, pts)
    with open(path, "w") as fh:
        fh.write("x,y,u_c,v_c\n")
        for (x, y), (u, v) in zip(pts, uv):
            fh.write(f"{x:.6f},{y:.6f},{u:.9f},{v:.9f}\n")
