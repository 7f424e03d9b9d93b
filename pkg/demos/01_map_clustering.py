"""Cluster a noisy synthetic chart into water/land and query the result."""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from rendezplan.envmap import RasterMap, cluster_map, distances_to_forbidden

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

rng = np.random.default_rng(11)

# a bright island blob plus a bright shoreline strip on dark water, with
# sensor-style speckle on top
h = w = 96
pixels = np.full((h, w), 0.18)
yy, xx = np.mgrid[0:h, 0:w]
pixels[(yy - 60) ** 2 + (xx - 34) ** 2 < 18**2] = 0.82
pixels[:18, 70:] = 0.82
pixels += rng.normal(0.0, 0.035, size=pixels.shape)
raster = RasterMap(pixels=np.clip(pixels, 0.0, 1.0), cell_size=10.0)

grid = cluster_map(raster, k=2, seed=3)
print(f"water cells: {int(grid.occupancy.sum())} / {grid.occupancy.size}")

# distance-to-land field over every cell center
cx = (np.arange(w) + 0.5) * grid.cell_size
cy = (np.arange(h) + 0.5) * grid.cell_size
gx, gy = np.meshgrid(cx, cy)
dist = distances_to_forbidden(grid, np.column_stack([gx.ravel(), gy.ravel()]))
dist = dist.reshape(h, w)

probe = np.array([500.0, 500.0])
print(f"clearance at {probe}: {distances_to_forbidden(grid, probe[None])[0]:.1f} m")

fig, axes = plt.subplots(1, 3, figsize=(13, 4.2))
axes[0].imshow(raster.pixels, origin="lower", cmap="gray")
axes[0].set_title("raw chart")
axes[1].imshow(grid.occupancy, origin="lower", cmap="Blues")
axes[1].set_title("clustered occupancy (blue = water)")
im = axes[2].imshow(dist, origin="lower", cmap="viridis")
axes[2].set_title("distance to nearest land, m")
fig.colorbar(im, ax=axes[2], shrink=0.8)
for ax in axes:
    ax.set_xticks([])
    ax.set_yticks([])
fig.tight_layout()
path = os.path.join(OUT, "01_map_clustering.png")
fig.savefig(path, dpi=130)
print(f"wrote {path}")
