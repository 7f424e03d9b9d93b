"""Small cross-algorithm sweep: arrival-time spread over a few seeds.

The CLI does the full 30-run sweep (`rendezplan --scenario scenario4
--compare`); this is the five-minute desk version with trimmed budgets.
"""

import dataclasses
import time

import numpy as np

from rendezplan.mission import run_mission
from rendezplan.optimizers import ALGORITHMS
from rendezplan.scenarios import load_preset

scenario = load_preset("scenario2")
scenario = dataclasses.replace(scenario, population=40, iterations=40,
                               replan_iterations=24)
seeds = range(4)

print(f"{'algo':<6}{'ok':>4}{'mean t_f':>10}{'std':>7}{'plans':>7}{'wall s':>8}")
for algo in ALGORITHMS:
    t0 = time.time()
    arrivals, plan_counts, ok = [], [], 0
    for seed in seeds:
        log = run_mission(scenario, algo, seed=seed)
        plan_counts.append(len(log.plans))
        if log.outcome == "rendezvous":
            ok += 1
            arrivals.append(log.achieved_t_f)
    print(f"{algo:<6}{ok:>3}/{len(list(seeds))}"
          f"{np.mean(arrivals):>10.1f}{np.std(arrivals):>7.2f}"
          f"{np.mean(plan_counts):>7.1f}{time.time() - t0:>8.1f}")
