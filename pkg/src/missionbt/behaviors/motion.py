"""Motion generation: straight line when clear, otherwise grid search around forbidden regions."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from missionbt.behaviors.goals import BehaviorError
from missionbt.worldmodel import (
    Region,
    Vec2,
    Waypoint,
    distance_to_region,
    region_bounds,
    segment_region_distance,
)

DEFAULT_RESOLUTION = 0.1
DEFAULT_INFLATION = 0.1
MARGIN = 1.0

Cell = tuple[int, int]


class UnreachableError(BehaviorError):
    pass


@dataclass
class OccupancyGrid:
    """Rasterized forbidden set. A cell is blocked when any point inside it
    could lie within ``inflation`` of a forbidden region."""

    origin: Vec2
    resolution: float
    nx: int
    ny: int
    blocked: set[Cell]

    @classmethod
    def build(
        cls,
        regions: Sequence[Region],
        extra_points: Iterable[Vec2],
        resolution: float = DEFAULT_RESOLUTION,
        inflation: float = DEFAULT_INFLATION,
    ) -> OccupancyGrid:
        xs, ys = [], []
        for p in extra_points:
            xs.append(p.x)
            ys.append(p.y)
        for g in regions:
            x0, y0, x1, y1 = region_bounds(g)
            xs += [x0, x1]
            ys += [y0, y1]
        pad = MARGIN + inflation
        origin = Vec2(min(xs) - pad, min(ys) - pad)
        nx = math.ceil((max(xs) + pad - origin.x) / resolution) + 1
        ny = math.ceil((max(ys) + pad - origin.y) / resolution) + 1
        grid = cls(origin, resolution, nx, ny, set())
        clearance = inflation + resolution * math.sqrt(2.0) / 2.0
        for g in regions:
            x0, y0, x1, y1 = region_bounds(g)
            i0, j0 = grid.cell_of(Vec2(x0 - clearance, y0 - clearance))
            i1, j1 = grid.cell_of(Vec2(x1 + clearance, y1 + clearance))
            for i in range(max(0, i0), min(nx - 1, i1) + 1):
                for j in range(max(0, j0), min(ny - 1, j1) + 1):
                    if (i, j) not in grid.blocked and distance_to_region(grid.center((i, j)), g) <= clearance:
                        grid.blocked.add((i, j))
        return grid

    def cell_of(self, p: Vec2) -> Cell:
        return (
            math.floor((p.x - self.origin.x) / self.resolution),
            math.floor((p.y - self.origin.y) / self.resolution),
        )

    def center(self, c: Cell) -> Vec2:
        return Vec2(
            self.origin.x + (c[0] + 0.5) * self.resolution,
            self.origin.y + (c[1] + 0.5) * self.resolution,
        )

    def free(self, c: Cell) -> bool:
        return 0 <= c[0] < self.nx and 0 <= c[1] < self.ny and c not in self.blocked

    def traversed_cells(self, a: Vec2, b: Vec2) -> list[Cell]:
        """Every cell the closed segment a-b touches (corner crossings include both neighbours)."""
        res = self.resolution
        fx0, fy0 = (a.x - self.origin.x) / res, (a.y - self.origin.y) / res
        fx1, fy1 = (b.x - self.origin.x) / res, (b.y - self.origin.y) / res
        i, j = math.floor(fx0), math.floor(fy0)
        i_end, j_end = math.floor(fx1), math.floor(fy1)
        dx, dy = fx1 - fx0, fy1 - fy0
        step_i = 1 if dx > 0 else -1
        step_j = 1 if dy > 0 else -1
        t_dx = abs(1.0 / dx) if dx else math.inf
        t_dy = abs(1.0 / dy) if dy else math.inf
        if dx > 0:
            t_mx = (i + 1 - fx0) * t_dx
        elif dx < 0:
            t_mx = (fx0 - i) * t_dx
        else:
            t_mx = math.inf
        if dy > 0:
            t_my = (j + 1 - fy0) * t_dy
        elif dy < 0:
            t_my = (fy0 - j) * t_dy
        else:
            t_my = math.inf
        cells = [(i, j)]
        guard = abs(i_end - i) + abs(j_end - j) + 4
        while (i, j) != (i_end, j_end) and guard > 0:
            guard -= 1
            if abs(t_mx - t_my) <= 1e-12:
                if min(t_mx, t_my) > 1.0:
                    break
                cells.append((i + step_i, j))
                cells.append((i, j + step_j))
                i += step_i
                j += step_j
                t_mx += t_dx
                t_my += t_dy
            elif t_mx < t_my:
                if t_mx > 1.0:
                    break
                i += step_i
                t_mx += t_dx
            else:
                if t_my > 1.0:
                    break
                j += step_j
                t_my += t_dy
            cells.append((i, j))
        return cells

    def line_of_sight(self, a: Vec2, b: Vec2) -> bool:
        return all(self.free(c) for c in self.traversed_cells(a, b))


_MOVES = [(1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0)] + [
    (di, dj, math.sqrt(2.0)) for di in (-1, 1) for dj in (-1, 1)
]


def grid_search(grid: OccupancyGrid, start: Cell, goal: Cell) -> list[Cell] | None:
    """Shortest 8-connected path (A*, octile heuristic, no corner cutting)."""
    if not (grid.free(start) and grid.free(goal)):
        return None

    def h(c: Cell) -> float:
        dx, dy = abs(c[0] - goal[0]), abs(c[1] - goal[1])
        return (dx + dy) + (math.sqrt(2.0) - 2.0) * min(dx, dy)

    g_cost = {start: 0.0}
    parent: dict[Cell, Cell] = {}
    heap = [(h(start), 0.0, start)]
    closed: set[Cell] = set()
    while heap:
        _, g, cur = heapq.heappop(heap)
        if cur in closed:
            continue
        if cur == goal:
            path = [cur]
            while cur in parent:
                cur = parent[cur]
                path.append(cur)
            return path[::-1]
        closed.add(cur)
        for di, dj, w in _MOVES:
            nxt = (cur[0] + di, cur[1] + dj)
            if not grid.free(nxt) or nxt in closed:
                continue
            if di and dj and not (grid.free((cur[0] + di, cur[1])) and grid.free((cur[0], cur[1] + dj))):
                continue
            ng = g + w
            if ng < g_cost.get(nxt, math.inf) - 1e-12:
                g_cost[nxt] = ng
                parent[nxt] = cur
                heapq.heappush(heap, (ng + h(nxt), ng, nxt))
    return None


def plan_path(
    start: Vec2,
    goal: Vec2,
    forbidden_regions: Sequence[Region],
    resolution: float = DEFAULT_RESOLUTION,
    speed_cap: float = 1.0,
    inflation: float = DEFAULT_INFLATION,
) -> list[Waypoint]:
    """Waypoints from ``start`` (excluded) to ``goal`` avoiding inflated regions."""
    if not forbidden_regions or all(
        segment_region_distance(start, goal, g) > inflation for g in forbidden_regions
    ):
        return [Waypoint(goal, speed_cap)]
    for g in forbidden_regions:
        if distance_to_region(goal, g) <= inflation:
            raise UnreachableError(f"goal ({goal.x}, {goal.y}) lies inside forbidden region {g.id}")
    grid = OccupancyGrid.build(forbidden_regions, (start, goal), resolution, inflation)
    s_cell, g_cell = grid.cell_of(start), grid.cell_of(goal)
    if not grid.free(s_cell):
        raise UnreachableError(f"start ({start.x}, {start.y}) is inside an inflated forbidden cell")
    if not grid.free(g_cell):
        raise UnreachableError(f"goal ({goal.x}, {goal.y}) is inside an inflated forbidden cell")
    cells = grid_search(grid, s_cell, g_cell)
    if cells is None:
        raise UnreachableError(f"no path from ({start.x}, {start.y}) to ({goal.x}, {goal.y})")
    # start/goal sit in their own free cells, so linking them to the cell centers keeps line of sight
    points = [start] + [grid.center(c) for c in cells] + [goal]
    out: list[Vec2] = []
    k = 0
    while k < len(points) - 1:
        nxt = k + 1
        for j in range(len(points) - 1, k + 1, -1):
            if grid.line_of_sight(points[k], points[j]):
                nxt = j
                break
        out.append(points[nxt])
        k = nxt
    return [Waypoint(p, speed_cap) for p in out]
