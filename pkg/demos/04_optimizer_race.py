"""All four search algorithms on one small planning problem.

Each gets the same population, the same iteration budget and ten seeds; the
plot shows the best-so-far cost per generation, the console the spread.
"""

import os
import time

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from rendezplan.cost import RendezvousSpec
from rendezplan.currents import make_random_field
from rendezplan.envmap import GridMap
from rendezplan.environment import EnvironmentSnapshot
from rendezplan.objective import build_objective
from rendezplan.obstacles import Obstacle, ObstacleKind, ObstacleSet
from rendezplan.optimizers import (
    BboConfig,
    DeConfig,
    FaConfig,
    PsoConfig,
    optimize,
)

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

grid = GridMap(np.ones((100, 100), bool), cell_size=10.0, depth_limit=100.0)
current = make_random_field(seed=77, n_vortices=8, extent=(0.0, 0.0, 1000.0, 1000.0),
                            n_layers=5, depth_extent=100.0)
obstacles = ObstacleSet(obstacles=(
    Obstacle(kind=ObstacleKind.QUASI_STATIC, position=np.array([420.0, 560.0, 50.0]),
             radius=35.0, uncertainty=10.0),
))
spec = RendezvousSpec(start=np.array([100.0, 100.0, 10.0]),
                      target=np.array([900.0, 900.0, 40.0]),
                      rendezvous_time=420.0, time_tolerance=60.0,
                      clearance_threshold=50.0)
ctx = build_objective(EnvironmentSnapshot(grid, current, obstacles), spec,
                      n_interior=2, m=80)

configs = {
    "pso": PsoConfig(population=30, iterations=60),
    "bbo": BboConfig(population=30, iterations=60, kept=12, recombined=12),
    "fa": FaConfig(population=30, iterations=60),
    "de": DeConfig(population=30, iterations=60),
}

fig, ax = plt.subplots(figsize=(8, 5))
for algo, cfg in configs.items():
    t0 = time.time()
    finals = []
    for seed in range(10):
        run = optimize(algo, ctx, cfg, seed=seed)
        finals.append(run.best_cost.total)
        if seed == 0:
            ax.plot(run.history_best, label=algo, lw=1.5)
    finals = np.array(finals)
    print(f"{algo}: best {finals.min():.6f}  worst {finals.max():.6f}  "
          f"median {np.median(finals):.6f}  ({time.time() - t0:.1f}s for 10 seeds)")

ax.set_yscale("log")
ax.set_xlabel("generation")
ax.set_ylabel("best total cost so far")
ax.legend()
ax.set_title("seed-0 convergence, pop 30 / 60 generations")
fig.tight_layout()
path = os.path.join(OUT, "04_optimizer_race.png")
fig.savefig(path, dpi=130)
print(f"wrote {path}")
