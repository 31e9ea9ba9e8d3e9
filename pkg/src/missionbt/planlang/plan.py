"""Execution plans and the plan document (execution + trigger + finish).

A plan document is a JSON object::

    {"execution": "<statements>", "trigger": "<condition>", "finish": "<condition>"}

``trigger`` may be omitted or empty, in which case it is the constant ``false``.
Execution statements are either a single meta-behavior call::

    visit_points(robots=[1, 2], points=[(1, 1), (2, 2)], allocation=min_conflict, speed=1.0)
    visit_points(robots=[1, 2, 3], line=((0, 0), (2, 0), 3))
    visit_points(robots=[1, 2, 3, 4], circle=((0, 0), 1.5, 4, 0))
    follow_targets(robots=[1], objects=[0], offset=(-1, 0), speed=0.8)
    herd(robots=[1, 2], objects=[0, 1], region=2, d_behind=0.7, allocation=min_conflict)

or a ``;``-separated program of per-robot tracks, run in order per robot::

    waypoints(robot=1, points=[(0, 0), (1, 1)], speed=0.5);
    parametric(robot=1, x=0.1*t*cos(t), y=0.1*t*sin(t), t_start=0, t_end=2*pi, samples=40, speed=0.5)
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Union

from missionbt.btree import ActionType
from missionbt.planlang.ast import FALSE, Expr, Type, referenced_ids, to_source
from missionbt.planlang.evaluator import EvalContext, EvalError, eval_expr
from missionbt.planlang.lexer import PlanError
from missionbt.planlang.parser import DSLTypeError, ExprParser, ParseError, parse_condition, type_of
from missionbt.worldmodel import Vec2, Waypoint, WorldState, WorldError

ALLOCATIONS = ("default", "min_conflict")


@dataclass(frozen=True)
class LineSpec:
    start: Vec2
    end: Vec2
    n: int


@dataclass(frozen=True)
class CircleSpec:
    center: Vec2
    radius: float
    n: int
    phase: float = 0.0


@dataclass(frozen=True)
class MetaCall:
    primitive: ActionType
    robots: tuple[int, ...]
    points: tuple[Vec2, ...] = ()
    line: LineSpec | None = None
    circle: CircleSpec | None = None
    objects: tuple[int, ...] = ()
    region: int | None = None
    offset: Vec2 = Vec2(0.0, 0.0)
    d_behind: float = 0.7
    allocation: str = "default"
    speed: float | None = None
    avoid: tuple[int, ...] = ()


@dataclass(frozen=True)
class WaypointPath:
    robot: int
    points: tuple[Vec2, ...]
    speed_cap: float


@dataclass(frozen=True)
class ParametricPath:
    robot: int
    x_expr: Expr
    y_expr: Expr
    t_start: float
    t_end: float
    samples: int
    speed_cap: float


Track = Union[WaypointPath, ParametricPath]


@dataclass(frozen=True)
class TrackProgram:
    """Explicit per-robot motion: waypoint lists and/or sampled parametric curves."""

    tracks: tuple[Track, ...]

    @property
    def robots(self) -> tuple[int, ...]:
        return tuple(sorted({t.robot for t in self.tracks}))


ExecutionPlan = Union[MetaCall, TrackProgram]


@dataclass(frozen=True)
class PlanDoc:
    node_idx: int | None
    execution: ExecutionPlan
    trigger: Expr = FALSE
    finish: Expr = FALSE
    source: dict[str, str] = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict[str, str]:
        return {
            "execution": self.source.get("execution", ""),
            "trigger": to_source(self.trigger),
            "finish": to_source(self.finish),
        }


# -- execution statement parsing -------------------------------------------

class _PlanParser(ExprParser):
    def const_number(self) -> float:
        start = self.peek()
        expr = self.expression()
        try:
            if type_of(expr, frozenset()) is not Type.NUM:
                raise DSLTypeError(f"expected a number at column {start.column}")
            return float(eval_expr(expr, _EMPTY_WORLD))
        except (DSLTypeError, EvalError) as exc:
            raise PlanError(f"constant expected at column {start.column}: {exc}") from None

    def point(self) -> Vec2:
        self.expect("(")
        x = self.const_number()
        self.expect(",")
        y = self.const_number()
        self.expect(")")
        return Vec2(x, y)

    def point_list(self) -> tuple[Vec2, ...]:
        self.expect("[")
        out = []
        if not self.check("]"):
            out.append(self.point())
            while self.match(","):
                out.append(self.point())
        self.expect("]")
        return tuple(out)

    def int_value(self) -> int:
        return self.int_literal()

    def ident(self, allowed: tuple[str, ...]) -> str:
        tok = self.peek()
        if tok.kind != "IDENT" or tok.text not in allowed:
            raise self.error(set(allowed))
        self.advance()
        return tok.text

    def line_spec(self) -> LineSpec:
        self.expect("(")
        a = self.point()
        self.expect(",")
        b = self.point()
        self.expect(",")
        n = self.int_literal()
        self.expect(")")
        return LineSpec(a, b, n)

    def circle_spec(self) -> CircleSpec:
        self.expect("(")
        c = self.point()
        self.expect(",")
        r = self.const_number()
        self.expect(",")
        n = self.int_literal()
        phase = 0.0
        if self.match(","):
            phase = self.const_number()
        self.expect(")")
        return CircleSpec(c, r, n, phase)

    def t_expr(self) -> Expr:
        start = self.peek()
        expr = self.expression()
        if type_of(expr) is not Type.NUM:
            raise DSLTypeError(f"trajectory expression at column {start.column} must be numeric")
        return expr

    def statement(self) -> tuple[str, dict[str, Any]]:
        tok = self.peek()
        if tok.kind != "IDENT" or tok.text not in _SCHEMAS:
            raise self.error(set(_SCHEMAS))
        self.advance()
        name = tok.text
        schema = _SCHEMAS[name]
        self.expect("(")
        args: dict[str, Any] = {}
        while not self.check(")"):
            key_tok = self.peek()
            if key_tok.kind != "IDENT" or key_tok.text not in schema:
                raise self.error(set(schema))
            self.advance()
            if key_tok.text in args:
                raise ParseError(f"{name}(): duplicate argument {key_tok.text!r}")
            self.expect("=")
            args[key_tok.text] = schema[key_tok.text](self)
            if not self.match(","):
                break
        self.expect(")")
        return name, args


_SCHEMAS: dict[str, dict[str, Callable[[_PlanParser], Any]]] = {
    "visit_points": {
        "robots": lambda p: tuple(p.int_list()),
        "points": _PlanParser.point_list,
        "line": _PlanParser.line_spec,
        "circle": _PlanParser.circle_spec,
        "allocation": lambda p: p.ident(ALLOCATIONS),
        "speed": _PlanParser.const_number,
        "avoid": lambda p: tuple(p.int_list()),
    },
    "follow_targets": {
        "robots": lambda p: tuple(p.int_list()),
        "objects": lambda p: tuple(p.int_list()),
        "offset": _PlanParser.point,
        "allocation": lambda p: p.ident(ALLOCATIONS),
        "speed": _PlanParser.const_number,
        "avoid": lambda p: tuple(p.int_list()),
    },
    "herd": {
        "robots": lambda p: tuple(p.int_list()),
        "objects": lambda p: tuple(p.int_list()),
        "region": _PlanParser.int_value,
        "d_behind": _PlanParser.const_number,
        "allocation": lambda p: p.ident(ALLOCATIONS),
        "speed": _PlanParser.const_number,
        "avoid": lambda p: tuple(p.int_list()),
    },
    "waypoints": {
        "robot": _PlanParser.int_value,
        "points": _PlanParser.point_list,
        "speed": _PlanParser.const_number,
    },
    "parametric": {
        "robot": _PlanParser.int_value,
        "x": _PlanParser.t_expr,
        "y": _PlanParser.t_expr,
        "t_start": _PlanParser.const_number,
        "t_end": _PlanParser.const_number,
        "samples": _PlanParser.int_value,
        "speed": _PlanParser.const_number,
    },
}
_REQUIRED = {
    "visit_points": ("robots",),
    "follow_targets": ("robots", "objects"),
    "herd": ("robots", "objects", "region"),
    "waypoints": ("robot", "points", "speed"),
    "parametric": ("robot", "x", "y", "t_start", "t_end", "samples", "speed"),
}

_EMPTY_WORLD = WorldState(time=0.0, robots=())


def _build_statement(name: str, args: dict[str, Any]) -> MetaCall | Track:
    missing = [k for k in _REQUIRED[name] if k not in args]
    if missing:
        raise PlanError(f"{name}(): missing argument(s) {missing}")
    if name == "waypoints":
        if not args["points"]:
            raise PlanError("waypoints(): points must be nonempty")
        if args["speed"] <= 0:
            raise PlanError("waypoints(): speed must be > 0")
        return WaypointPath(args["robot"], args["points"], args["speed"])
    if name == "parametric":
        if args["samples"] < 2:
            raise PlanError("parametric(): samples must be >= 2")
        if not args["t_end"] > args["t_start"]:
            raise PlanError("parametric(): t_end must be greater than t_start")
        if args["speed"] <= 0:
            raise PlanError("parametric(): speed must be > 0")
        return ParametricPath(
            args["robot"], args["x"], args["y"], args["t_start"], args["t_end"],
            args["samples"], args["speed"],
        )
    if not args["robots"]:
        raise PlanError(f"{name}(): robots must be nonempty")
    if args.get("speed") is not None and args["speed"] <= 0:
        raise PlanError(f"{name}(): speed must be > 0")
    if name == "visit_points":
        given = [k for k in ("points", "line", "circle") if k in args]
        if len(given) != 1:
            raise PlanError("visit_points(): give exactly one of points=, line=, circle=")
    if name == "herd" and args.get("d_behind", 0.7) <= 0:
        raise PlanError("herd(): d_behind must be > 0")
    return MetaCall(primitive=ActionType(name), **args)


def parse_execution(text: str) -> ExecutionPlan:
    parser = _PlanParser(text)
    if parser.at_end():
        raise ParseError("empty execution section")
    statements = [_build_statement(*parser.statement())]
    while parser.match(";"):
        if parser.at_end():
            break
        statements.append(_build_statement(*parser.statement()))
    if not parser.at_end():
        raise parser.error({";", "end of input"})
    metas = [s for s in statements if isinstance(s, MetaCall)]
    if metas:
        if len(statements) != 1:
            raise PlanError("a meta-behavior call must be the only execution statement")
        return metas[0]
    return TrackProgram(tuple(statements))  # type: ignore[arg-type]


def execution_ids(plan: ExecutionPlan) -> dict[str, set[int]]:
    if isinstance(plan, MetaCall):
        regions = set(plan.avoid)
        if plan.region is not None:
            regions.add(plan.region)
        return {"robots": set(plan.robots), "objects": set(plan.objects), "regions": regions}
    out = {"robots": set(plan.robots), "objects": set(), "regions": set()}
    for track in plan.tracks:
        if isinstance(track, ParametricPath):
            for expr in (track.x_expr, track.y_expr):
                for key, ids in referenced_ids(expr).items():
                    out[key] |= ids
    return out


_FENCE = re.compile(r"^\s*```[a-zA-Z]*\s*\n(.*?)\n\s*```\s*$", re.DOTALL)


def strip_fences(text: str) -> str:
    m = _FENCE.match(text)
    return m.group(1) if m else text.strip()


def parse_plan(
    text: str,
    node_idx: int | None = None,
    world_ids: dict[str, set[int]] | None = None,
) -> PlanDoc:
    """Parse and validate a plan document; errors carry repair diagnostics."""
    try:
        data = json.loads(strip_fences(text))
    except json.JSONDecodeError as exc:
        raise PlanError(f"plan document is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise PlanError("plan document must be a JSON object")
    unknown = set(data) - {"execution", "trigger", "finish"}
    diags: list[str] = [f"unknown plan section {k!r}" for k in sorted(unknown)]
    execution = trigger = finish = None
    for section in ("execution", "finish"):
        if not str(data.get(section) or "").strip():
            diags.append(f"{section}: section is required")
    try:
        if str(data.get("execution") or "").strip():
            execution = parse_execution(str(data["execution"]))
    except PlanError as exc:
        diags.extend(f"execution: {d}" for d in exc.diagnostics)
    trigger_text = str(data.get("trigger") or "").strip()
    try:
        trigger = parse_condition(trigger_text) if trigger_text else FALSE
    except PlanError as exc:
        diags.extend(f"trigger: {d}" for d in exc.diagnostics)
    try:
        if str(data.get("finish") or "").strip():
            finish = parse_condition(str(data["finish"]))
    except PlanError as exc:
        diags.extend(f"finish: {d}" for d in exc.diagnostics)
    if world_ids is not None:
        for section, part in (("execution", execution), ("trigger", trigger), ("finish", finish)):
            if part is None:
                continue
            ids = execution_ids(part) if section == "execution" else referenced_ids(part)
            for key, found in ids.items():
                for missing in sorted(found - world_ids.get(key, set())):
                    diags.append(f"{section}: unresolved {key[:-1]} id {missing}")
    if diags:
        raise PlanError("; ".join(diags), diags)
    return PlanDoc(
        node_idx,
        execution,  # type: ignore[arg-type]
        trigger,  # type: ignore[arg-type]
        finish,  # type: ignore[arg-type]
        source={"execution": str(data["execution"]), "trigger": trigger_text, "finish": str(data["finish"])},
    )


def sample_parametric(
    path: ParametricPath,
    world: WorldState | None = None,
    ctx: EvalContext | None = None,
) -> list[Waypoint]:
    """Evaluate the curve at ``samples`` evenly spaced parameter values."""
    world = world or _EMPTY_WORLD
    base = ctx or EvalContext()
    n = path.samples
    span = path.t_end - path.t_start
    out = []
    for k in range(n):
        t = path.t_start + k * span / (n - 1)
        local = EvalContext(base.node_start_time, t, base.tasks_done, base.bindings)
        x = eval_expr(path.x_expr, world, local)
        y = eval_expr(path.y_expr, world, local)
        try:
            out.append(Waypoint(Vec2(x, y), path.speed_cap))
        except WorldError as exc:
            raise EvalError(f"trajectory sample at t={t}: {exc}") from None
    return out
