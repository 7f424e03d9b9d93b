"""Raster chart clustering and occupancy-grid queries.

A survey raster (grayscale or RGB, intensities in [0, 1]) is segmented into
water and land by k-means over per-pixel features.  The resulting binary
occupancy grid supports total-function point feasibility tests and O(1)
distance-to-nearest-forbidden queries backed by a precomputed Euclidean
distance transform.

Grid conventions
----------------
* ``occupancy[row, col]`` is True for Feasible (water) cells.
* ``origin`` is the world coordinate of the minimum corner of cell (0, 0);
  world x maps to columns, world y to rows.
* A point maps to the cell it floors into, so a point exactly on a cell
  boundary belongs to the higher-index cell.
* Depth is a separate bound: the water column spans [0, depth_limit].
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import distance_transform_edt

from .errors import MapInputError

__all__ = [
    "RasterMap",
    "GridMap",
    "cluster_map",
    "kmeans",
    "is_feasible",
    "distance_to_forbidden",
    "read_pgm",
    "read_csv_grid",
    "write_grid_pgm",
    "grid_to_json",
    "grid_from_json",
]

_KMEANS_ITER_CAP = 100


@dataclass
class RasterMap:
    """Source imagery: (H, W) grayscale or (H, W, 3) RGB, values in [0, 1]."""

    pixels: np.ndarray
    cell_size: float = 10.0
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        self.pixels = np.asarray(self.pixels, dtype=float)
        if self.pixels.ndim not in (2, 3):
            raise MapInputError(f"raster must be 2-D or 3-D, got shape {self.pixels.shape}")
        if self.pixels.ndim == 3 and self.pixels.shape[2] != 3:
            raise MapInputError("3-D raster must have 3 channels")
        if self.pixels.size == 0:
            raise MapInputError("raster is empty")
        lo, hi = float(self.pixels.min()), float(self.pixels.max())
        if lo < 0.0 or hi > 1.0:
            raise MapInputError(f"raster intensities outside [0, 1]: [{lo}, {hi}]")


@dataclass
class GridMap:
    """Binary occupancy grid; True cells are Feasible water."""

    occupancy: np.ndarray
    cell_size: float
    origin: tuple[float, float] = (0.0, 0.0)
    depth_limit: float = 1000.0
    _nearest_forbidden: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.occupancy = np.asarray(self.occupancy, dtype=bool)
        if self.occupancy.ndim != 2 or self.occupancy.size == 0:
            raise MapInputError("occupancy must be a non-empty 2-D array")
        if self.cell_size <= 0:
            raise MapInputError("cell_size must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return self.occupancy.shape  # type: ignore[return-value]

    def extent(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the gridded area in world metres."""
        h, w = self.occupancy.shape
        ox, oy = self.origin
        return ox, oy, ox + w * self.cell_size, oy + h * self.cell_size

    def world_to_cell(self, p: np.ndarray) -> tuple[int, int]:
        """Floor a world (x, y) point into its (row, col) cell."""
        ox, oy = self.origin
        col = int(np.floor((p[0] - ox) / self.cell_size))
        row = int(np.floor((p[1] - oy) / self.cell_size))
        return row, col

    def cell_center(self, row: int, col: int) -> np.ndarray:
        ox, oy = self.origin
        return np.array([ox + (col + 0.5) * self.cell_size, oy + (row + 0.5) * self.cell_size])


def kmeans(
    features: np.ndarray, k: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Lloyd's algorithm with k-means++ seeding.

    Parameters
    ----------
    features : (N, F) array of feature vectors.
    k : number of clusters, 1 <= k <= N.
    rng : seeded generator; fixes both the seeding and tie behavior.

    Returns
    -------
    labels : (N,) int array; nearest-center ties break to the lowest index.
    centers : (k, F) array.
    objective : per-iteration sum of squared distances to assigned centers,
        recorded after each update; non-increasing by construction.
    """
    features = np.asarray(features, dtype=float)
    n = features.shape[0]
    if not 1 <= k <= n:
        raise MapInputError(f"k must be in [1, {n}], got {k}")

    centers = _kmeans_pp_init(features, k, rng)
    labels = np.zeros(n, dtype=int)
    objective: list[float] = []
    for _ in range(_KMEANS_ITER_CAP):
        d2 = ((features[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)  # argmin takes the lowest index on ties
        obj = float(d2[np.arange(n), new_labels].sum())
        if objective:
            assert obj <= objective[-1] + 1e-9, "clustering objective increased"
        objective.append(obj)
        converged = bool(np.array_equal(new_labels, labels)) and len(objective) > 1
        labels = new_labels
        for c in range(k):
            members = features[labels == c]
            if len(members):  # empty clusters keep their previous center
                centers[c] = members.mean(axis=0)
        if converged:
            break
    return labels, centers, objective


def _kmeans_pp_init(features: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = features.shape[0]
    centers = np.empty((k, features.shape[1]), dtype=float)
    centers[0] = features[rng.integers(n)]
    d2 = ((features - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0.0:  # all remaining points coincide with a chosen center
            centers[c:] = centers[0]
            break
        centers[c] = features[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((features - centers[c]) ** 2).sum(axis=1))
    return centers


def cluster_map(
    raster: RasterMap,
    k: int = 2,
    seed: int = 0,
    water_seed: tuple[int, int] | None = None,
    depth_limit: float = 1000.0,
) -> GridMap:
    """Segment a raster into a binary occupancy grid.

    The water cluster is the one containing the pixel at ``water_seed``
    (row, col) when given; otherwise the cluster whose center scores highest
    on a water heuristic (lowest intensity for grayscale, blue dominance for
    RGB).  All remaining clusters become Forbidden.  Deterministic for a
    fixed seed.
    """
    h, w = raster.pixels.shape[:2]
    features = raster.pixels.reshape(h * w, -1)
    rng = np.random.default_rng(seed)
    labels, centers, _ = kmeans(features, k, rng)
    labels = labels.reshape(h, w)

    if water_seed is not None:
        row, col = water_seed
        if not (0 <= row < h and 0 <= col < w):
            raise MapInputError(f"water_seed {water_seed} outside raster {h}x{w}")
        water = int(labels[row, col])
    else:
        if centers.shape[1] == 3:
            score = centers[:, 2] - 0.5 * (centers[:, 0] + centers[:, 1])
        else:
            score = -centers[:, 0]
        water = int(np.argmax(score))

    return GridMap(
        occupancy=labels == water,
        cell_size=raster.cell_size,
        origin=raster.origin,
        depth_limit=depth_limit,
    )


def is_feasible(grid: GridMap, p: np.ndarray) -> bool:
    """Total feasibility test for a 3-D point.

    Points outside the gridded extent or outside the [0, depth_limit] water
    column are Forbidden.  Never raises.
    """
    p = np.asarray(p, dtype=float)
    if not (0.0 <= p[2] <= grid.depth_limit):
        return False
    row, col = grid.world_to_cell(p[:2])
    h, w = grid.occupancy.shape
    if not (0 <= row < h and 0 <= col < w):
        return False
    return bool(grid.occupancy[row, col])


def feasible_mask(grid: GridMap, pts: np.ndarray) -> np.ndarray:
    """Vectorized :func:`is_feasible` for an (N, 3) point array."""
    pts = np.asarray(pts, dtype=float)
    h, w = grid.occupancy.shape
    ox, oy = grid.origin
    cols = np.floor((pts[:, 0] - ox) / grid.cell_size).astype(int)
    rows = np.floor((pts[:, 1] - oy) / grid.cell_size).astype(int)
    inside = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
    depth_ok = (pts[:, 2] >= 0.0) & (pts[:, 2] <= grid.depth_limit)
    occ = grid.occupancy[np.clip(rows, 0, h - 1), np.clip(cols, 0, w - 1)]
    return depth_ok & inside & occ


def _nearest_forbidden_table(grid: GridMap) -> np.ndarray | None:
    """(2, H, W) row/col indices of the nearest Forbidden cell, or None."""
    if grid._nearest_forbidden is None:
        if grid.occupancy.all():
            grid._nearest_forbidden = np.empty((0,))  # sentinel: no forbidden cells
        else:
            _, indices = distance_transform_edt(grid.occupancy, return_indices=True)
            grid._nearest_forbidden = indices
    table = grid._nearest_forbidden
    return None if table.size == 0 else table


def distance_to_forbidden(grid: GridMap, p: np.ndarray) -> float:
    """Clearance from a 2-D point to the Forbidden region, in metres.

    Distance to the nearest Forbidden cell center minus half a cell
    diagonal, clamped at zero; exact to within one cell diagonal of a brute
    force scan.  Points inside a Forbidden cell return 0.  A grid with no
    Forbidden cells returns +inf.
    """
    p = np.asarray(p, dtype=float)
    table = _nearest_forbidden_table(grid)
    if table is None:
        return float("inf")
    h, w = grid.occupancy.shape
    row, col = grid.world_to_cell(p)
    crow = min(max(row, 0), h - 1)
    ccol = min(max(col, 0), w - 1)
    if 0 <= row < h and 0 <= col < w and not grid.occupancy[row, col]:
        return 0.0
    nrow, ncol = table[0][crow, ccol], table[1][crow, ccol]
    center = grid.cell_center(int(nrow), int(ncol))
    half_diag = 0.5 * grid.cell_size * np.sqrt(2.0)
    return float(max(0.0, np.linalg.norm(p - center) - half_diag))


def distances_to_forbidden(grid: GridMap, pts: np.ndarray) -> np.ndarray:
    """Vectorized :func:`distance_to_forbidden` for an (N, 2) point array."""
    pts = np.asarray(pts, dtype=float)
    table = _nearest_forbidden_table(grid)
    if table is None:
        return np.full(len(pts), np.inf)
    h, w = grid.occupancy.shape
    ox, oy = grid.origin
    cols = np.floor((pts[:, 0] - ox) / grid.cell_size).astype(int)
    rows = np.floor((pts[:, 1] - oy) / grid.cell_size).astype(int)
    inside = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
    crows = np.clip(rows, 0, h - 1)
    ccols = np.clip(cols, 0, w - 1)
    nrows = table[0][crows, ccols]
    ncols = table[1][crows, ccols]
    centers = np.stack(
        [ox + (ncols + 0.5) * grid.cell_size, oy + (nrows + 0.5) * grid.cell_size], axis=1
    )
    half_diag = 0.5 * grid.cell_size * np.sqrt(2.0)
    d = np.maximum(0.0, np.linalg.norm(pts - centers, axis=1) - half_diag)
    d[inside & ~grid.occupancy[crows, ccols]] = 0.0
    return d


# ---------------------------------------------------------------------------
# I/O


def read_pgm(path: str, cell_size: float = 10.0, origin: tuple[float, float] = (0.0, 0.0)) -> RasterMap:
    """Read a PGM image (ASCII P2 or binary P5) as a [0, 1] raster."""
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        magic, rest = data.split(None, 1)
    except ValueError:
        raise MapInputError(f"{path}: not a PGM file") from None
    if magic not in (b"P2", b"P5"):
        raise MapInputError(f"{path}: unsupported magic {magic!r}")

    # Header tokens (width, height, maxval) allowing '#' comment lines.
    tokens: list[int] = []
    pos = 0
    while len(tokens) < 3:
        if pos >= len(rest):
            raise MapInputError(f"{path}: truncated PGM header")
        if rest[pos : pos + 1] == b"#":
            pos = rest.index(b"\n", pos) + 1
            continue
        if rest[pos : pos + 1].isspace():
            pos += 1
            continue
        end = pos
        while end < len(rest) and not rest[end : end + 1].isspace():
            end += 1
        tokens.append(int(rest[pos:end]))
        pos = end
    width, height, maxval = tokens
    if maxval <= 0:
        raise MapInputError(f"{path}: bad maxval {maxval}")

    if magic == b"P2":
        values = np.array(rest[pos:].split(), dtype=float)
    else:
        pos += 1  # single whitespace byte after maxval
        dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
        values = np.frombuffer(rest[pos:], dtype=dtype, count=width * height).astype(float)
    if values.size != width * height:
        raise MapInputError(f"{path}: expected {width * height} pixels, got {values.size}")
    pixels = values.reshape(height, width) / maxval
    return RasterMap(pixels=pixels, cell_size=cell_size, origin=origin)


def read_csv_grid(
    path: str, cell_size: float = 10.0, origin: tuple[float, float] = (0.0, 0.0)
) -> RasterMap:
    """Read a flat CSV of intensities (one row per line) as a raster."""
    try:
        pixels = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise MapInputError(f"{path}: {exc}") from None
    return RasterMap(pixels=pixels, cell_size=cell_size, origin=origin)


def write_grid_pgm(grid: GridMap, path: str) -> None:
    """Write the occupancy grid as ASCII PGM: water 255, land 0."""
    h, w = grid.occupancy.shape
    lines = [f"P2\n{w} {h}\n255"]
    for row in grid.occupancy:
        lines.append(" ".join("255" if cell else "0" for cell in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def grid_to_json(grid: GridMap) -> dict:
    """Serialize to a dict with row-major run-length-encoded occupancy."""
    flat = grid.occupancy.ravel()
    runs: list[list[int]] = []
    start = 0
    for i in range(1, len(flat) + 1):
        if i == len(flat) or flat[i] != flat[start]:
            runs.append([int(flat[start]), i - start])
            start = i
    return {
        "height": grid.occupancy.shape[0],
        "width": grid.occupancy.shape[1],
        "cell_size": grid.cell_size,
        "origin": list(grid.origin),
        "depth_limit": grid.depth_limit,
        "occupancy_rle": runs,
    }


def grid_from_json(doc: dict) -> GridMap:
    try:
        h, w = int(doc["height"]), int(doc["width"])
        flat = np.empty(h * w, dtype=bool)
        pos = 0
        for value, count in doc["occupancy_rle"]:
            flat[pos : pos + count] = bool(value)
            pos += count
        if pos != h * w:
            raise MapInputError(f"RLE covers {pos} cells, grid has {h * w}")
        return GridMap(
            occupancy=flat.reshape(h, w),
            cell_size=float(doc["cell_size"]),
            origin=tuple(doc["origin"]),
            depth_limit=float(doc.get("depth_limit", 1000.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MapInputError(f"malformed grid JSON: {exc}") from None


def save_grid_json(grid: GridMap, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(grid_to_json(grid), fh)


def load_grid_json(path: str) -> GridMap:
    with open(path) as fh:
        return grid_from_json(json.load(fh))
