"""Time-constrained underwater rendezvous path planning.

Library layout:

* :mod:`rendezplan.envmap` -- chart clustering and occupancy-grid queries
* :mod:`rendezplan.currents` -- layered vortex current field
* :mod:`rendezplan.obstacles` -- uncertain obstacle models and clearance
* :mod:`rendezplan.spline` -- corridor bounds, spline paths, trajectory synthesis
* :mod:`rendezplan.cost` -- penalty-based trajectory cost and feasibility checks
* :mod:`rendezplan.optimizers` -- PSO, BBO, FA and DE behind one interface
* :mod:`rendezplan.mission` -- online planning loop with replanning
* :mod:`rendezplan.scenarios` -- scenario schema, presets and synthetic worlds
* :mod:`rendezplan.render` -- deterministic SVG scene renderer
* :mod:`rendezplan.cli` -- command-line runner
"""

from .cost import CostBreakdown, PenaltyWeights, RendezvousSpec, VehicleLimits
from .currents import CurrentField, Vortex, make_random_field
from .envmap import GridMap, RasterMap, cluster_map, read_pgm
from .environment import EnvironmentSnapshot
from .errors import (
    ConfigError,
    MapInputError,
    RendezplanError,
    UnplaceableObstacleError,
)
from .mission import (
    MissionLog,
    RendezvousMessage,
    initial_plan,
    run_mission,
    verify_flown_path,
)
from .obstacles import Obstacle, ObstacleKind, ObstacleSet
from .optimizers import ALGORITHMS, OptimizerRun, optimize
from .scenarios import Scenario, build_scenario, load_preset, load_scenario
from .spline import Trajectory, corridor_bounds, state_at, synthesize_trajectory

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "ConfigError",
    "CostBreakdown",
    "CurrentField",
    "EnvironmentSnapshot",
    "GridMap",
    "MapInputError",
    "MissionLog",
    "Obstacle",
    "ObstacleKind",
    "ObstacleSet",
    "OptimizerRun",
    "PenaltyWeights",
    "RasterMap",
    "RendezplanError",
    "RendezvousMessage",
    "RendezvousSpec",
    "Scenario",
    "Trajectory",
    "UnplaceableObstacleError",
    "VehicleLimits",
    "Vortex",
    "build_scenario",
    "cluster_map",
    "corridor_bounds",
    "initial_plan",
    "load_preset",
    "load_scenario",
    "make_random_field",
    "optimize",
    "read_pgm",
    "run_mission",
    "state_at",
    "synthesize_trajectory",
    "verify_flown_path",
]
