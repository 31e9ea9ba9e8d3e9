"""Meta-behavior library: goal generation, goal allocation, motion generation."""

from missionbt.behaviors.allocation import Assignment, allocate_default, allocate_min_conflict, hungarian
from missionbt.behaviors.goals import (
    BehaviorError,
    GoalSet,
    Regeneration,
    drive_point,
    gen_follow_targets,
    gen_herd,
    gen_visit_points,
)
from missionbt.behaviors.motion import OccupancyGrid, UnreachableError, grid_search, plan_path

__all__ = [
    "Assignment", "allocate_default", "allocate_min_conflict", "hungarian",
    "BehaviorError", "GoalSet", "Regeneration", "drive_point",
    "gen_follow_targets", "gen_herd", "gen_visit_points",
    "OccupancyGrid", "UnreachableError", "grid_search", "plan_path",
]
