"""Fly one full mission and replay what happened, step by step."""

import dataclasses
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from rendezplan.mission import run_mission, verify_flown_path
from rendezplan.render import mission_svgs
from rendezplan.scenarios import load_preset

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

# the bundled four-obstacle scenario, trimmed so the replay runs in seconds
scenario = load_preset("scenario3")
scenario = dataclasses.replace(scenario, population=40, iterations=40,
                               replan_iterations=24)
log = run_mission(scenario, "pso", seed=8)

print(f"outcome: {log.outcome} (t_f={log.achieved_t_f:.0f} s, "
      f"target {log.target_time:.0f} +/- {log.time_tolerance:.0f})")
for line in log.events:
    print(" ", line)

check = verify_flown_path(log)
print(f"dense check: {check.samples} samples, {check.incursions} incursions, "
      f"min clearance {check.min_clearance:.1f} m")

# overhead view: every plan as a thin line, the flown track on top, colored
# by depth
fig, ax = plt.subplots(figsize=(8, 8))
occ = scenario.grid.occupancy
ax.imshow(occ, origin="lower", cmap="Blues", alpha=0.45,
          extent=[0, occ.shape[1] * scenario.grid.cell_size,
                  0, occ.shape[0] * scenario.grid.cell_size])
for p in log.plans:
    ax.plot(p.trajectory.positions[:, 0], p.trajectory.positions[:, 1],
            lw=0.9, alpha=0.65)
sc = ax.scatter(log.flown[:, 1], log.flown[:, 2], c=log.flown[:, 3], s=3,
                cmap="viridis_r")
fig.colorbar(sc, ax=ax, shrink=0.75, label="depth, m")
for ob in log.snapshots[-1].obstacles.obstacles:
    circle = plt.Circle(ob.position[:2],
                        log.snapshots[-1].obstacles.confidence_radius(ob),
                        fill=False, color="crimson", ls="--")
    ax.add_patch(circle)
ax.plot(*scenario.spec.start[:2], "r^", ms=11)
ax.plot(*scenario.spec.target[:2], "ks", ms=11)
ax.set_aspect("equal")
ax.set_title(f"{scenario.name}: {len(log.plans)} plans, outcome {log.outcome}")
fig.tight_layout()
png = os.path.join(OUT, "05_mission_replay.png")
fig.savefig(png, dpi=130)
print(f"wrote {png}")

# the library's own SVG frames, one per adopted plan
for name, svg in mission_svgs(log, scenario):
    path = os.path.join(OUT, f"05_{name}.svg")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg)
    print(f"wrote {path}")
