"""Immutable environment snapshot consumed by planning and cost evaluation."""

from __future__ import annotations

from dataclasses import dataclass

from .currents import CurrentField
from .envmap import GridMap
from .obstacles import ObstacleSet


@dataclass(frozen=True, eq=False)
class EnvironmentSnapshot:
    """World state at one planning instant.

    Planning code treats snapshots as read-only; the mission loop replaces
    the snapshot wholesale when the field evolves or obstacles step.
    """

    grid: GridMap
    current: CurrentField
    obstacles: ObstacleSet
    timestamp: float = 0.0
