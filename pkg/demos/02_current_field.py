"""Random vortex current field: surface quiver, depth bands, evolution."""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from rendezplan.currents import evolve, make_random_field, velocity_3d_batch

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

field = make_random_field(seed=5, n_vortices=20, extent=(0.0, 0.0, 2000.0, 2000.0),
                          n_layers=5, depth_extent=100.0)

xs = np.linspace(50.0, 1950.0, 30)
pts2d = np.column_stack([v.ravel() for v in np.meshgrid(xs, xs)])


def surface_uv(f):
    p = np.column_stack([pts2d, np.zeros(len(pts2d))])
    vel = velocity_3d_batch(f, p)
    return vel[:, 0], vel[:, 1]


# the field drifts a little every update step; same seed, same movie
states = [field]
for _ in range(3):
    states.append(evolve(states[-1]))

fig, axes = plt.subplots(2, 2, figsize=(10, 9))
for ax, f, k in zip(axes.ravel(), states, range(4)):
    u, v = surface_uv(f)
    speed = np.hypot(u, v)
    ax.quiver(pts2d[:, 0], pts2d[:, 1], u, v, speed, cmap="coolwarm", scale=25)
    ax.set_title(f"surface flow, update step {k}")
    ax.set_aspect("equal")
print("max surface speed per step:",
      ["%.2f" % np.hypot(*surface_uv(f)).max() for f in states])

# depth changes the picture too: each 20 m band carries its own jittered copy
u0, v0 = surface_uv(field)
hot = pts2d[np.argmax(np.hypot(u0, v0))]
probes = np.array([[hot[0], hot[1], z] for z in (0.0, 25.0, 45.0, 65.0, 85.0)])
print(f"column at ({hot[0]:.0f}, {hot[1]:.0f}):")
for row, vel in zip(probes, velocity_3d_batch(field, probes)):
    print(f"z={row[2]:5.1f} m -> u={vel[0]:+.3f} v={vel[1]:+.3f} w={vel[2]:+.3f}")

fig.tight_layout()
path = os.path.join(OUT, "02_current_field.png")
fig.savefig(path, dpi=130)
print(f"wrote {path}")
