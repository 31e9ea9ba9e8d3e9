"""Deterministic fixed-step 2D kinematics: waypoint tracking, fleeing objects, coverage."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from missionbt.worldmodel import (
    DynamicObject,
    RobotState,
    Vec2,
    Waypoint,
    WorldState,
    distance,
    point_in_region,
    update_coverage,
)

DEFAULT_MAX_TICKS = 20_000


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.1
    waypoint_tolerance: float = 0.05
    max_ticks: int = DEFAULT_MAX_TICKS
    sense_radius: float = 0.5
    cell_size: float = 0.25
    seed: int = 0
    # std-dev (m/s) of per-tick object velocity noise; 0 keeps the run rng-free
    object_noise: float = 0.0

    def problems(self) -> list[str]:
        out = []
        if not self.dt > 0:
            out.append(f"dt must be > 0, got {self.dt}")
        if not self.waypoint_tolerance > 0:
            out.append(f"waypoint_tolerance must be > 0, got {self.waypoint_tolerance}")
        if self.max_ticks < 1:
            out.append(f"max_ticks must be >= 1, got {self.max_ticks}")
        if not self.sense_radius > 0:
            out.append(f"sense_radius must be > 0, got {self.sense_radius}")
        if not self.cell_size > 0:
            out.append(f"cell_size must be > 0, got {self.cell_size}")
        if self.object_noise < 0:
            out.append(f"object_noise must be >= 0, got {self.object_noise}")
        return out


@dataclass(frozen=True)
class SimEvent:
    kind: str  # "robot_arrived" | "object_entered_region"
    entity: int
    region: int | None = None


@dataclass(frozen=True)
class TickOutcome:
    world: WorldState
    consumed: dict[int, int] = field(default_factory=dict)
    events: tuple[SimEvent, ...] = ()


def object_flee_velocity(obj: DynamicObject, robots: Iterable[Vec2 | RobotState]) -> Vec2:
    """Repulsion from every robot inside ``flee_radius``, falling off linearly, clamped to v_max."""
    vx = vy = 0.0
    for r in robots:
        pos = r.position if isinstance(r, RobotState) else r
        d = distance(obj.position, pos)
        if d >= obj.flee_radius:
            continue
        if d == 0.0:
            ux, uy = 1.0, 0.0
        else:
            ux, uy = (obj.position.x - pos.x) / d, (obj.position.y - pos.y) / d
        w = 1.0 - d / obj.flee_radius
        vx += ux * w
        vy += uy * w
    vx *= obj.flee_gain
    vy *= obj.flee_gain
    return _clamp(vx, vy, obj.v_max)


def _clamp(vx: float, vy: float, limit: float) -> Vec2:
    speed = math.hypot(vx, vy)
    if speed > limit:
        if limit <= 0:
            return Vec2(0.0, 0.0)
        k = limit / speed
        vx, vy = vx * k, vy * k
    return Vec2(vx, vy)


def _heading(old: Vec2, new: Vec2, previous: float) -> float:
    if old == new:
        return previous
    return math.atan2(new.y - old.y, new.x - old.x)


def _advance_robot(robot: RobotState, dt: float, tol: float) -> tuple[RobotState, int]:
    pos = robot.position
    queue = list(robot.waypoint_queue)
    time_left = dt
    popped = 0
    while queue and time_left > 0:
        wp = queue[0]
        speed = min(robot.max_speed, wp.speed_cap)
        if speed <= 0:
            break
        d = distance(pos, wp.position)
        reach = speed * time_left
        if d <= reach:
            pos = wp.position
            time_left -= d / speed
            queue.pop(0)
            popped += 1
            continue
        k = reach / d
        pos = Vec2(pos.x + (wp.position.x - pos.x) * k, pos.y + (wp.position.y - pos.y) * k)
        time_left = 0.0
        if d - reach <= tol:
            # close enough to count as arrived; no snap, the step budget is spent
            queue.pop(0)
            popped += 1
    heading = _heading(robot.position, pos, robot.heading)
    return replace(robot, position=pos, waypoint_queue=tuple(queue), heading=heading), popped


def step(
    world: WorldState,
    config: SimConfig,
    active_waypoints: Mapping[int, Sequence[Waypoint]] | None = None,
) -> TickOutcome:
    """Advance the world by one ``dt``.

    ``active_waypoints`` replaces the queues of the listed robots before
    moving; robots not listed keep their current queue.
    """
    if active_waypoints:
        world = world.with_robot_queues(active_waypoints)
    dt = config.dt
    old_positions = [r.position for r in world.robots]

    robots = []
    consumed: dict[int, int] = {}
    events: list[SimEvent] = []
    for r in world.robots:
        moved, popped = _advance_robot(r, dt, config.waypoint_tolerance)
        robots.append(moved)
        if popped:
            consumed[r.id] = popped
            if not moved.waypoint_queue:
                events.append(SimEvent("robot_arrived", r.id))

    rng = None
    if config.object_noise > 0 and world.objects:
        rng = np.random.default_rng([world.rng_seed, world.tick])
    objects = []
    for o in world.objects:
        v = object_flee_velocity(o, old_positions) if o.v_max > 0 else Vec2(0.0, 0.0)
        if rng is not None and o.v_max > 0:
            nx, ny = rng.normal(0.0, config.object_noise, size=2)
            v = _clamp(v.x + float(nx), v.y + float(ny), o.v_max)
        new_pos = Vec2(o.position.x + v.x * dt, o.position.y + v.y * dt)
        for g in world.regions:
            if not point_in_region(o.position, g) and point_in_region(new_pos, g):
                events.append(SimEvent("object_entered_region", o.id, g.id))
        objects.append(replace(o, position=new_pos, heading=_heading(o.position, new_pos, o.heading)))

    grids = dict(world.coverage_grids)
    positions = [r.position for r in robots]
    for gid, grid in grids.items():
        grids[gid] = update_coverage(grid, world.region(gid), positions, config.sense_radius)

    new_world = replace(
        world,
        time=world.time + dt,
        tick=world.tick + 1,
        robots=tuple(robots),
        objects=tuple(objects),
        coverage_grids=grids,
    )
    return TickOutcome(new_world, consumed, tuple(events))


def tick_record(world: WorldState) -> dict:
    """Canonical per-tick snapshot used for trace logs and digests."""
    return {
        "tick": world.tick,
        "time": world.time,
        "robots": [[r.id, r.position.x, r.position.y] for r in world.robots],
        "objects": [[o.id, o.position.x, o.position.y] for o in world.objects],
    }


def trace_hash(ticks: Iterable[WorldState | dict]) -> str:
    """SHA-256 over the canonical serialization of positions and time per tick."""
    h = hashlib.sha256()
    for item in ticks:
        rec = tick_record(item) if isinstance(item, WorldState) else {
            k: item[k] for k in ("tick", "time", "robots", "objects")
        }
        h.update(json.dumps(rec, separators=(",", ":")).encode())
        h.update(b"\n")
    return h.hexdigest()
