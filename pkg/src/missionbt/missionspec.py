"""Mission files: raw text, the template-standardized form, and world seeds.

Mission file layout (JSON)::

    {
      "mission_id": "A1",
      "category": "A",                       # optional: A | B | C
      "archetype": "...",                    # optional free text
      "raw_text": "...",
      "standardized": { ... },               # optional, see StandardizedMission
      "world": {
        "robots":  [{"id": 1, "position": [0, 0], "max_speed": 1.0}],
        "objects": [{"id": 0, "position": [2, 0], "v_max": 0.5, "flee_radius": 1.0, "flee_gain": 1.0}],
        "regions": [{"id": 0, "name": "goal", "kind": "target",
                     "circle": {"center": [0, 0], "radius": 1.0}}
                    | {"id": 1, "name": "wall", "kind": "forbidden",
                       "polygon": [[0, 0], [1, 0], [1, 1]]}]
      },
      "sim": {"dt": 0.1, "max_ticks": 20000, "waypoint_tolerance": 0.05,
              "sense_radius": 0.5, "cell_size": 0.25, "seed": 0, "object_noise": 0.0}
    }
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable

from missionbt.sim import SimConfig
from missionbt.worldmodel import (
    Circle,
    DynamicObject,
    Polygon,
    Region,
    RegionKind,
    RobotState,
    Vec2,
    WorldError,
    WorldState,
    make_world,
    shape_problems,
    validate_world,
)

log = logging.getLogger(__name__)

CATEGORIES = ("A", "B", "C")


class MissionError(ValueError):
    """Malformed mission file or unresolved reference."""

    def __init__(self, message: str, diagnostics: list[str] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or [message]


@dataclass(frozen=True)
class Diagnostic:
    field: str
    reason: str

    def __str__(self) -> str:
        return f"{self.field}: {self.reason}"


@dataclass
class TaskClause:
    label: str
    description: str
    finish: str
    constraints: list[str] = field(default_factory=list)
    trigger: str = ""
    hints: list[str] = field(default_factory=list)
    robot_ids: list[int] = field(default_factory=list)
    object_ids: list[int] = field(default_factory=list)
    region_ids: list[int] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> TaskClause:
        if not isinstance(data, dict):
            raise MissionError(f"task must be an object, got {type(data).__name__}")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise MissionError(f"task: unknown field(s) {sorted(unknown)}")
        for name in ("label", "description", "finish"):
            if name not in data:
                raise MissionError(f"task: missing field {name!r}")
        return cls(
            label=str(data["label"]),
            description=str(data["description"]),
            finish=str(data["finish"] or ""),
            constraints=[str(c) for c in data.get("constraints") or []],
            trigger=str(data.get("trigger") or ""),
            hints=[str(h) for h in data.get("hints") or []],
            robot_ids=_int_list(data.get("robot_ids"), "task.robot_ids"),
            object_ids=_int_list(data.get("object_ids"), "task.object_ids"),
            region_ids=_int_list(data.get("region_ids"), "task.region_ids"),
        )


@dataclass
class StandardizedMission:
    """The fixed template sections. Team/objects/regions list world ids."""

    overview: str
    team: list[int]
    tasks: list[TaskClause]
    mission_finish: str
    objects: list[int] = field(default_factory=list)
    regions: list[int] = field(default_factory=list)
    hints: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "overview": self.overview,
            "team": list(self.team),
            "objects": list(self.objects),
            "regions": list(self.regions),
            "tasks": [t.to_dict() for t in self.tasks],
            "mission_finish": self.mission_finish,
            "hints": list(self.hints),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> StandardizedMission:
        if not isinstance(data, dict):
            raise MissionError("standardized mission must be an object")
        known = {"overview", "team", "objects", "regions", "tasks", "mission_finish", "hints"}
        unknown = set(data) - known
        if unknown:
            raise MissionError(f"standardized: unknown section(s) {sorted(unknown)}")
        for name in ("overview", "team", "tasks", "mission_finish"):
            if name not in data:
                raise MissionError(f"standardized: missing section {name!r}")
        if not isinstance(data["tasks"], list):
            raise MissionError("standardized.tasks must be a list")
        return cls(
            overview=str(data["overview"]),
            team=_int_list(data["team"], "standardized.team"),
            objects=_int_list(data.get("objects"), "standardized.objects"),
            regions=_int_list(data.get("regions"), "standardized.regions"),
            tasks=[TaskClause.from_dict(t) for t in data["tasks"]],
            mission_finish=str(data["mission_finish"]),
            hints=[str(h) for h in data.get("hints") or []],
        )


@dataclass
class MissionSpec:
    mission_id: str
    raw_text: str
    world: WorldState
    sim: SimConfig = field(default_factory=SimConfig)
    standardized: StandardizedMission | None = None
    category: str | None = None
    archetype: str = ""

    def world_ids(self) -> dict[str, set[int]]:
        return self.world.ids()


def _int_list(value: Any, where: str) -> list[int]:
    if value is None:
        return []
    if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise MissionError(f"{where} must be a list of integers, got {value!r}")
    return list(value)


def validate_spec(spec: StandardizedMission, world_ids: dict[str, set[int]]) -> list[Diagnostic]:
    """Invariant check for a standardized mission; empty list means valid."""
    diags: list[Diagnostic] = []
    robots, objects, regions = world_ids["robots"], world_ids["objects"], world_ids["regions"]
    for section, ids, known in (
        ("team", spec.team, robots),
        ("objects", spec.objects, objects),
        ("regions", spec.regions, regions),
    ):
        for i in ids:
            if i not in known:
                diags.append(Diagnostic(section, f"unresolved id {i} (not declared in the world)"))
    if not spec.tasks:
        diags.append(Diagnostic("tasks", "at least one task is required"))
    if not spec.mission_finish.strip():
        diags.append(Diagnostic("mission_finish", "mission finish condition is empty"))
    labels: set[str] = set()
    for k, task in enumerate(spec.tasks):
        where = f"tasks[{k}]"
        if not task.label.strip():
            diags.append(Diagnostic(f"{where}.label", "empty label"))
        elif task.label in labels:
            diags.append(Diagnostic(f"{where}.label", f"duplicate label {task.label!r}"))
        labels.add(task.label)
        if not task.finish.strip():
            diags.append(
                Diagnostic(f"{where}.finish", "every atomic task needs a clearly defined completion criterion")
            )
        for i in task.robot_ids:
            if i not in spec.team:
                diags.append(Diagnostic(f"{where}.robot_ids", f"unresolved robot id {i} (not in team)"))
        for i in task.object_ids:
            if i not in objects:
                diags.append(Diagnostic(f"{where}.object_ids", f"unresolved object id {i}"))
        for i in task.region_ids:
            if i not in regions:
                diags.append(Diagnostic(f"{where}.region_ids", f"unresolved region id {i}"))
    return diags


# -- world (de)serialization -------------------------------------------------

def _region_from_dict(d: dict[str, Any]) -> Region:
    kind = RegionKind(d.get("kind", "plain"))
    if "circle" in d:
        c = d["circle"]
        shape = Circle(Vec2.of(c["center"]), float(c["radius"]))
    elif "polygon" in d:
        shape = Polygon(tuple(Vec2.of(p) for p in d["polygon"]))
    else:
        raise MissionError(f"region {d.get('id')}: needs 'circle' or 'polygon'")
    return Region(int(d["id"]), str(d.get("name", f"region{d['id']}")), shape, kind)


def _region_to_dict(g: Region) -> dict[str, Any]:
    out: dict[str, Any] = {"id": g.id, "name": g.name, "kind": g.kind.value}
    if isinstance(g.shape, Circle):
        out["circle"] = {"center": g.shape.center.as_list(), "radius": g.shape.radius}
    else:
        out["polygon"] = [v.as_list() for v in g.shape.vertices]
    return out


def world_to_dict(world: WorldState) -> dict[str, Any]:
    return {
        "robots": [
            {"id": r.id, "position": r.position.as_list(), "max_speed": r.max_speed} for r in world.robots
        ],
        "objects": [
            {
                "id": o.id,
                "position": o.position.as_list(),
                "v_max": o.v_max,
                "flee_radius": o.flee_radius,
                "flee_gain": o.flee_gain,
            }
            for o in world.objects
        ],
        "regions": [_region_to_dict(g) for g in world.regions],
    }


def world_problems(data: dict[str, Any]) -> list[str]:
    """Shape and entity diagnostics on a raw world block (no exceptions)."""
    problems: list[str] = []
    for g in data.get("regions") or []:
        try:
            if "polygon" in g:
                shape = Polygon(tuple(Vec2.of(p) for p in g["polygon"]))
            elif "circle" in g:
                shape = Circle(Vec2.of(g["circle"]["center"]), float(g["circle"]["radius"]))
            else:
                problems.append(f"region {g.get('id')}: needs 'circle' or 'polygon'")
                continue
            problems.extend(f"region {g.get('id')}: {p}" for p in shape_problems(shape))
        except (WorldError, KeyError, TypeError, ValueError) as exc:
            problems.append(f"region {g.get('id')}: {exc}")
    return problems


def world_from_dict(data: dict[str, Any], sim: SimConfig) -> WorldState:
    try:
        robots = [
            RobotState(int(r["id"]), Vec2.of(r["position"]), float(r.get("max_speed", 1.0)))
            for r in data.get("robots") or []
        ]
        objects = [
            DynamicObject(
                int(o["id"]),
                Vec2.of(o["position"]),
                float(o.get("v_max", 0.0)),
                float(o.get("flee_radius", 1.0)),
                float(o.get("flee_gain", 1.0)),
            )
            for o in data.get("objects") or []
        ]
        regions = [_region_from_dict(g) for g in data.get("regions") or []]
        return make_world(robots, objects, regions, cell_size=sim.cell_size, seed=sim.seed)
    except (KeyError, TypeError) as exc:
        raise MissionError(f"world: malformed entity ({exc})") from None
    except WorldError as exc:
        raise MissionError(f"world: {exc}") from None


def sim_from_dict(data: dict[str, Any] | None) -> SimConfig:
    data = data or {}
    known = {f.name for f in fields(SimConfig)}
    unknown = set(data) - known
    if unknown:
        raise MissionError(f"sim: unknown field(s) {sorted(unknown)}")
    for name, value in data.items():
        kind = int if name in ("max_ticks", "seed") else (int, float)
        if isinstance(value, bool) or not isinstance(value, kind):
            raise MissionError(f"sim: {name} must be a number, got {value!r}")
    cfg = SimConfig(**data)
    problems = cfg.problems()
    if problems:
        raise MissionError("sim: " + "; ".join(problems), [f"sim: {p}" for p in problems])
    return cfg


def load_mission(document: str | dict[str, Any]) -> MissionSpec:
    """Parse a mission document (JSON text or an already-decoded dict)."""
    if isinstance(document, str):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as exc:
            raise MissionError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    else:
        data = document
    if not isinstance(data, dict):
        raise MissionError("mission document must be an object")
    for key in ("mission_id", "raw_text", "world"):
        if key not in data:
            raise MissionError(f"missing top-level key {key!r}")
    category = data.get("category")
    if category is not None and category not in CATEGORIES:
        raise MissionError(f"category must be one of {CATEGORIES}, got {category!r}")
    sim = sim_from_dict(data.get("sim"))
    problems = world_problems(data["world"])
    if problems:
        raise MissionError("world: " + "; ".join(problems), problems)
    world = world_from_dict(data["world"], sim)
    standardized = None
    if data.get("standardized") is not None:
        standardized = StandardizedMission.from_dict(data["standardized"])
        diags = validate_spec(standardized, world.ids())
        if diags:
            raise MissionError("; ".join(map(str, diags)), [str(d) for d in diags])
    return MissionSpec(
        mission_id=str(data["mission_id"]),
        raw_text=str(data["raw_text"]),
        world=world,
        sim=sim,
        standardized=standardized,
        category=category,
        archetype=str(data.get("archetype", "")),
    )


def load_mission_file(path: str | Path) -> MissionSpec:
    return load_mission(Path(path).read_text())


def dump_mission(spec: MissionSpec) -> dict[str, Any]:
    out: dict[str, Any] = {"mission_id": spec.mission_id}
    if spec.category is not None:
        out["category"] = spec.category
    if spec.archetype:
        out["archetype"] = spec.archetype
    out["raw_text"] = spec.raw_text
    if spec.standardized is not None:
        out["standardized"] = spec.standardized.to_dict()
    out["world"] = world_to_dict(spec.world)
    out["sim"] = asdict(spec.sim)
    return out


def serialize_mission(spec: MissionSpec) -> str:
    return json.dumps(dump_mission(spec), indent=2)


def parse_standardized(text: str, world_ids: dict[str, set[int]]) -> tuple[StandardizedMission | None, list[str]]:
    """Decode and validate a provider's standardization; returns (result, diagnostics)."""
    from missionbt.planlang import strip_fences

    try:
        data = json.loads(strip_fences(text))
        spec = StandardizedMission.from_dict(data)
    except json.JSONDecodeError as exc:
        return None, [f"response is not valid JSON: {exc}"]
    except MissionError as exc:
        return None, exc.diagnostics
    diags = validate_spec(spec, world_ids)
    return (spec, []) if not diags else (None, [str(d) for d in diags])


def standardize(
    raw: str,
    provider: Any,
    world_ids: dict[str, set[int]],
    *,
    transcript: Any = None,
    render: Callable[[str, dict[str, set[int]]], str] | None = None,
) -> StandardizedMission:
    """Ask the provider to rewrite ``raw`` into the template sections (with repair)."""
    from missionbt.orchestrator.stages import run_stage, standardize_prompt

    prompt = (render or standardize_prompt)(raw, world_ids)
    return run_stage(
        "standardize",
        prompt,
        provider,
        lambda text: parse_standardized(text, world_ids),
        transcript,
    )
