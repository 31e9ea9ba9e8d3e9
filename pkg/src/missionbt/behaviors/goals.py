"""Goal generation: visit points (explicit or formations), follow targets, herd."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

from missionbt.worldmodel import Region, Vec2, WorldState, distance, point_in_region, region_centroid


class BehaviorError(ValueError):
    pass


class Regeneration(str, enum.Enum):
    STATIC = "static"
    PER_TICK = "per_tick"


@dataclass(frozen=True)
class GoalSet:
    goals: tuple[Vec2, ...]
    speed_caps: tuple[float | None, ...] | None = None
    regeneration: Regeneration = Regeneration.STATIC
    # object id behind each goal, for following/herding
    sources: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.goals)


def gen_visit_points(
    points: Sequence[Vec2] | None = None,
    *,
    line: tuple[Vec2, Vec2, int] | None = None,
    circle: tuple[Vec2, float, int, float] | None = None,
) -> GoalSet:
    """Explicit points pass through; ``line`` is (a, b, n), ``circle`` is (center, r, n, phase)."""
    if sum(x is not None for x in (points, line, circle)) != 1:
        raise BehaviorError("give exactly one of points, line, circle")
    if points is not None:
        if not points:
            raise BehaviorError("explicit point list is empty")
        return GoalSet(tuple(points))
    if line is not None:
        a, b, n = line
        if n < 1:
            raise BehaviorError(f"line formation needs n >= 1, got {n}")
        if n == 1:
            return GoalSet((a,))
        if distance(a, b) == 0:
            raise BehaviorError("degenerate line: endpoints coincide")
        return GoalSet(
            tuple(Vec2(a.x + (b.x - a.x) * k / (n - 1), a.y + (b.y - a.y) * k / (n - 1)) for k in range(n))
        )
    center, r, n, phase = circle  # type: ignore[misc]
    if n < 1:
        raise BehaviorError(f"circle formation needs n >= 1, got {n}")
    if not r > 0:
        raise BehaviorError(f"circle radius must be > 0, got {r}")
    pts = []
    for k in range(n):
        ang = phase + 2.0 * math.pi * k / n
        pts.append(Vec2(center.x + r * math.cos(ang), center.y + r * math.sin(ang)))
    return GoalSet(tuple(pts))


def gen_follow_targets(object_ids: Sequence[int], offset: Vec2, world: WorldState) -> GoalSet:
    goals = []
    for oid in object_ids:
        try:
            obj = world.object(oid)
        except KeyError:
            raise BehaviorError(f"unknown object id {oid}") from None
        goals.append(obj.position + offset)
    return GoalSet(tuple(goals), regeneration=Regeneration.PER_TICK, sources=tuple(object_ids))


def drive_point(obj: Vec2, centroid: Vec2, d_behind: float) -> Vec2:
    """Point ``d_behind`` beyond ``obj`` on the ray from ``centroid`` through it."""
    d = distance(obj, centroid)
    if d == 0.0:
        direction = Vec2(1.0, 0.0)
    else:
        direction = (obj - centroid) * (1.0 / d)
    return obj + direction * d_behind


def gen_herd(
    object_ids: Sequence[int],
    target_region: Region,
    d_behind: float,
    world: WorldState,
) -> GoalSet:
    """One drive point per object still outside the target region."""
    if not d_behind > 0:
        raise BehaviorError(f"d_behind must be > 0, got {d_behind}")
    centroid = region_centroid(target_region)
    goals, sources = [], []
    for oid in object_ids:
        try:
            obj = world.object(oid)
        except KeyError:
            raise BehaviorError(f"unknown object id {oid}") from None
        if point_in_region(obj.position, target_region):
            continue
        goals.append(drive_point(obj.position, centroid, d_behind))
        sources.append(oid)
    return GoalSet(tuple(goals), regeneration=Regeneration.PER_TICK, sources=tuple(sources))
