"""Geometric ground truth: entities, regions, distances and coverage accounting."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

BOUNDARY_EPS = 1e-12


class WorldError(ValueError):
    """Invalid world configuration (bad geometry, duplicate ids, non-finite values)."""


@dataclass(frozen=True, slots=True)
class Vec2:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise WorldError(f"non-finite vector ({self.x}, {self.y})")

    def __add__(self, other: Vec2) -> Vec2:
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: Vec2) -> Vec2:
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, k: float) -> Vec2:
        return Vec2(self.x * k, self.y * k)

    __rmul__ = __mul__

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def as_list(self) -> list[float]:
        return [self.x, self.y]

    @classmethod
    def of(cls, value: Sequence[float] | Vec2) -> Vec2:
        if isinstance(value, Vec2):
            return value
        if len(value) != 2:
            raise WorldError(f"expected a 2-element point, got {value!r}")
        return cls(float(value[0]), float(value[1]))


def distance(p: Vec2, q: Vec2) -> float:
    return math.hypot(p.x - q.x, p.y - q.y)


@dataclass(frozen=True, slots=True)
class Waypoint:
    position: Vec2
    speed_cap: float


@dataclass(frozen=True, slots=True)
class RobotState:
    id: int
    position: Vec2
    max_speed: float
    waypoint_queue: tuple[Waypoint, ...] = ()
    heading: float = 0.0


@dataclass(frozen=True, slots=True)
class DynamicObject:
    id: int
    position: Vec2
    v_max: float = 0.0
    flee_radius: float = 1.0
    flee_gain: float = 1.0
    heading: float = 0.0


class RegionKind(str, enum.Enum):
    TARGET = "target"
    FORBIDDEN = "forbidden"
    PLAIN = "plain"


@dataclass(frozen=True, slots=True)
class Circle:
    center: Vec2
    radius: float


@dataclass(frozen=True, slots=True)
class Polygon:
    vertices: tuple[Vec2, ...]

    def edges(self) -> Iterable[tuple[Vec2, Vec2]]:
        n = len(self.vertices)
        for k in range(n):
            yield self.vertices[k], self.vertices[(k + 1) % n]


Shape = Circle | Polygon


@dataclass(frozen=True, slots=True)
class Region:
    id: int
    name: str
    shape: Shape
    kind: RegionKind = RegionKind.PLAIN

    def __post_init__(self) -> None:
        for problem in shape_problems(self.shape):
            raise WorldError(f"region {self.id}: {problem}")


def _cross(o: Vec2, a: Vec2, b: Vec2) -> float:
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)


def _on_segment(p: Vec2, a: Vec2, b: Vec2) -> bool:
    return point_segment_distance(p, a, b) <= BOUNDARY_EPS


def segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2, eps: float = 1e-12) -> bool:
    """Closed-segment intersection test (touching counts)."""
    d1 = _cross(c, d, a)
    d2 = _cross(c, d, b)
    d3 = _cross(a, b, c)
    d4 = _cross(a, b, d)
    if ((d1 > eps and d2 < -eps) or (d1 < -eps and d2 > eps)) and (
        (d3 > eps and d4 < -eps) or (d3 < -eps and d4 > eps)
    ):
        return True
    return (
        point_segment_distance(a, c, d) <= eps
        or point_segment_distance(b, c, d) <= eps
        or point_segment_distance(c, a, b) <= eps
        or point_segment_distance(d, a, b) <= eps
    )


def shape_problems(shape: Shape) -> list[str]:
    """Return human-readable geometry problems; empty when the shape is valid."""
    if isinstance(shape, Circle):
        if not (shape.radius > 0 and math.isfinite(shape.radius)):
            return [f"circle radius must be > 0, got {shape.radius}"]
        return []
    verts = shape.vertices
    if len(verts) < 3:
        return [f"polygon needs at least 3 vertices, got {len(verts)}"]
    if abs(polygon_area(verts)) <= BOUNDARY_EPS and all(
        abs(_cross(verts[0], verts[1], v)) <= BOUNDARY_EPS for v in verts[2:]
    ):
        return ["degenerate polygon: all vertices collinear"]
    edges = list(shape.edges())
    n = len(edges)
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if segments_intersect(*edges[i], *edges[j]):
                return [f"polygon is self-intersecting (edges {i} and {j})"]
    return []


def polygon_area(verts: Sequence[Vec2]) -> float:
    s = 0.0
    n = len(verts)
    for k in range(n):
        a, b = verts[k], verts[(k + 1) % n]
        s += a.x * b.y - b.x * a.y
    return 0.5 * s


def point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> float:
    abx, aby = b.x - a.x, b.y - a.y
    denom = abx * abx + aby * aby
    if denom == 0.0:
        return distance(p, a)
    t = ((p.x - a.x) * abx + (p.y - a.y) * aby) / denom
    t = min(1.0, max(0.0, t))
    return math.hypot(p.x - (a.x + t * abx), p.y - (a.y + t * aby))


def point_in_region(p: Vec2, region: Region | Shape) -> bool:
    """Closed membership: the boundary counts as inside."""
    shape = region.shape if isinstance(region, Region) else region
    if isinstance(shape, Circle):
        return distance(p, shape.center) <= shape.radius
    inside = False
    for a, b in shape.edges():
        if _on_segment(p, a, b):
            return True
        if (a.y > p.y) != (b.y > p.y):
            x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y)
            if p.x < x_cross:
                inside = not inside
    return inside


def distance_to_region(p: Vec2, region: Region | Shape) -> float:
    """Distance to the nearest boundary point, zero when inside."""
    shape = region.shape if isinstance(region, Region) else region
    if isinstance(shape, Circle):
        return max(0.0, distance(p, shape.center) - shape.radius)
    if point_in_region(p, shape):
        return 0.0
    return min(point_segment_distance(p, a, b) for a, b in shape.edges())


def segment_region_distance(a: Vec2, b: Vec2, region: Region | Shape) -> float:
    """Minimum distance between segment a-b and a region (zero if they meet)."""
    shape = region.shape if isinstance(region, Region) else region
    if isinstance(shape, Circle):
        return max(0.0, point_segment_distance(shape.center, a, b) - shape.radius)
    if point_in_region(a, shape) or point_in_region(b, shape):
        return 0.0
    best = math.inf
    for c, d in shape.edges():
        if segments_intersect(a, b, c, d):
            return 0.0
        best = min(
            best,
            point_segment_distance(a, c, d),
            point_segment_distance(b, c, d),
            point_segment_distance(c, a, b),
            point_segment_distance(d, a, b),
        )
    return best


def region_centroid(region: Region | Shape) -> Vec2:
    shape = region.shape if isinstance(region, Region) else region
    if isinstance(shape, Circle):
        return shape.center
    verts = shape.vertices
    area = polygon_area(verts)
    cx = cy = 0.0
    n = len(verts)
    for k in range(n):
        a, b = verts[k], verts[(k + 1) % n]
        w = a.x * b.y - b.x * a.y
        cx += (a.x + b.x) * w
        cy += (a.y + b.y) * w
    return Vec2(cx / (6.0 * area), cy / (6.0 * area))


def region_bounds(region: Region | Shape) -> tuple[float, float, float, float]:
    """Axis-aligned bounding box as (xmin, ymin, xmax, ymax)."""
    shape = region.shape if isinstance(region, Region) else region
    if isinstance(shape, Circle):
        c, r = shape.center, shape.radius
        return c.x - r, c.y - r, c.x + r, c.y + r
    xs = [v.x for v in shape.vertices]
    ys = [v.y for v in shape.vertices]
    return min(xs), min(ys), max(xs), max(ys)


@dataclass(frozen=True, slots=True)
class CoverageGrid:
    """Cells are squares over the region's bounding box; a cell belongs to the
    region iff its center is inside. ``covered`` only ever grows."""

    region_id: int
    cell_size: float
    origin: Vec2
    cells: frozenset[tuple[int, int]]
    covered: frozenset[tuple[int, int]] = frozenset()

    @property
    def total_in_region(self) -> int:
        return len(self.cells)

    @property
    def fraction(self) -> float:
        return len(self.covered) / len(self.cells)

    def cell_center(self, cell: tuple[int, int]) -> Vec2:
        i, j = cell
        return Vec2(
            self.origin.x + (i + 0.5) * self.cell_size,
            self.origin.y + (j + 0.5) * self.cell_size,
        )


def build_coverage_grid(region: Region, cell_size: float = 0.25) -> CoverageGrid:
    if cell_size <= 0:
        raise WorldError(f"cell_size must be > 0, got {cell_size}")
    xmin, ymin, xmax, ymax = region_bounds(region)
    nx = max(1, math.ceil((xmax - xmin) / cell_size - 1e-9))
    ny = max(1, math.ceil((ymax - ymin) / cell_size - 1e-9))
    origin = Vec2(xmin, ymin)
    cells = set()
    for i in range(nx):
        for j in range(ny):
            c = Vec2(xmin + (i + 0.5) * cell_size, ymin + (j + 0.5) * cell_size)
            if point_in_region(c, region):
                cells.add((i, j))
    if not cells:
        raise WorldError(
            f"region {region.id}: no coverage cell centers inside region at cell_size {cell_size}"
        )
    return CoverageGrid(region.id, cell_size, origin, frozenset(cells))


def update_coverage(
    grid: CoverageGrid,
    region: Region,
    robot_positions: Iterable[Vec2],
    sense_radius: float,
) -> CoverageGrid:
    """Mark every in-region cell whose center is within ``sense_radius`` of a robot."""
    if region.id != grid.region_id:
        raise WorldError(f"grid for region {grid.region_id} used with region {region.id}")
    newly = set()
    cs = grid.cell_size
    for p in robot_positions:
        i0 = math.floor((p.x - sense_radius - grid.origin.x) / cs)
        i1 = math.floor((p.x + sense_radius - grid.origin.x) / cs)
        j0 = math.floor((p.y - sense_radius - grid.origin.y) / cs)
        j1 = math.floor((p.y + sense_radius - grid.origin.y) / cs)
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                cell = (i, j)
                if cell in grid.cells and cell not in grid.covered and cell not in newly:
                    if distance(grid.cell_center(cell), p) <= sense_radius:
                        newly.add(cell)
    if not newly:
        return grid
    return replace(grid, covered=grid.covered | newly)


@dataclass(frozen=True)
class WorldState:
    time: float
    robots: tuple[RobotState, ...]
    objects: tuple[DynamicObject, ...] = ()
    regions: tuple[Region, ...] = ()
    coverage_grids: dict[int, CoverageGrid] = field(default_factory=dict)
    rng_seed: int = 0
    tick: int = 0

    def robot(self, rid: int) -> RobotState:
        for r in self.robots:
            if r.id == rid:
                return r
        raise KeyError(f"unknown robot id {rid}")

    def object(self, oid: int) -> DynamicObject:
        for o in self.objects:
            if o.id == oid:
                return o
        raise KeyError(f"unknown object id {oid}")

    def region(self, gid: int) -> Region:
        for g in self.regions:
            if g.id == gid:
                return g
        raise KeyError(f"unknown region id {gid}")

    def coverage(self, gid: int) -> float:
        if gid not in self.coverage_grids:
            raise KeyError(f"no coverage grid for region {gid}")
        return self.coverage_grids[gid].fraction

    def ids(self) -> dict[str, set[int]]:
        return {
            "robots": {r.id for r in self.robots},
            "objects": {o.id for o in self.objects},
            "regions": {g.id for g in self.regions},
        }

    def with_robot_queues(self, queues: dict[int, Sequence[Waypoint]]) -> WorldState:
        robots = tuple(
            replace(r, waypoint_queue=tuple(queues[r.id])) if r.id in queues else r
            for r in self.robots
        )
        return replace(self, robots=robots)


def validate_world(world: WorldState) -> list[str]:
    problems: list[str] = []
    for label, items in (("robot", world.robots), ("object", world.objects), ("region", world.regions)):
        seen: set[int] = set()
        for item in items:
            if item.id < 0:
                problems.append(f"{label} id {item.id} must be non-negative")
            if item.id in seen:
                problems.append(f"duplicate {label} id {item.id}")
            seen.add(item.id)
    for r in world.robots:
        if not r.max_speed > 0:
            problems.append(f"robot {r.id}: max_speed must be > 0")
    for o in world.objects:
        if o.v_max < 0:
            problems.append(f"object {o.id}: v_max must be >= 0")
        if o.v_max > 0 and not (o.flee_radius > 0 and o.flee_gain > 0):
            problems.append(f"object {o.id}: flee_radius and flee_gain must be > 0")
    if world.time < 0:
        problems.append("time must be >= 0")
    return problems


def make_world(
    robots: Sequence[RobotState],
    objects: Sequence[DynamicObject] = (),
    regions: Sequence[Region] = (),
    *,
    cell_size: float = 0.25,
    seed: int = 0,
) -> WorldState:
    """Assemble a validated world with one coverage grid per region."""
    world = WorldState(
        time=0.0,
        robots=tuple(robots),
        objects=tuple(objects),
        regions=tuple(regions),
        coverage_grids={g.id: build_coverage_grid(g, cell_size) for g in regions},
        rng_seed=seed,
    )
    problems = validate_world(world)
    if problems:
        raise WorldError("; ".join(problems))
    return world
