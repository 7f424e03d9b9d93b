"""Corridor boxes, random control polygons and the B-spline paths they carry."""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.patches as mpatches
import matplotlib.pyplot as plt
import numpy as np

from rendezplan.currents import make_random_field
from rendezplan.spline import (
    corridor_bounds,
    random_polygon,
    sample_curve,
    synthesize_trajectory,
)

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

start = np.array([100.0, 100.0, 10.0])
target = np.array([1900.0, 1500.0, 60.0])
bounds = corridor_bounds(start, target, 6)
rng = np.random.default_rng(2)

fig, ax = plt.subplots(figsize=(9, 7))
for lo, hi in zip(bounds.lower, bounds.upper):
    ax.add_patch(mpatches.Rectangle((lo[0], lo[1]), hi[0] - lo[0], hi[1] - lo[1],
                                    fill=False, edgecolor="#999999", lw=0.8))

for k in range(6):
    poly = random_polygon(start, target, bounds, rng)
    pts = sample_curve(poly, m=120)
    ctrl = poly.control_points()
    ax.plot(ctrl[:, 0], ctrl[:, 1], "o--", ms=3, lw=0.7, alpha=0.5)
    ax.plot(pts[:, 0], pts[:, 1], lw=1.6)

ax.plot(*start[:2], "r^", ms=10)
ax.plot(*target[:2], "ks", ms=10)
ax.set_aspect("equal")
ax.set_title("random corridor polygons and their smoothed paths")
fig.tight_layout()
path = os.path.join(OUT, "03_spline_corridor.png")
fig.savefig(path, dpi=130)
print(f"wrote {path}")

# timing comes from pushing the curve through a current field at fixed
# water-relative speed; the same geometry takes a different time to fly
field = make_random_field(seed=9, n_vortices=15, extent=(0.0, 0.0, 2000.0, 2000.0))
poly = random_polygon(start, target, bounds, np.random.default_rng(0))
for speed in (1.5, 2.5, 3.5):
    traj = synthesize_trajectory(poly, field, speed, m=120)
    print(f"water speed {speed:.1f} m/s -> length {traj.length:7.1f} m, "
          f"t_f {traj.t_f:7.1f} s")
