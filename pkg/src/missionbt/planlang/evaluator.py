"""Pure evaluation of condition expressions against a world snapshot."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from missionbt.planlang.ast import Binary, Call, Expr, Num, Quant, Unary, Var
from missionbt.planlang.lexer import PlanError
from missionbt.worldmodel import (
    Region,
    Vec2,
    WorldState,
    distance,
    distance_to_region,
    point_in_region,
)

EQ_TOL = 1e-9


class EvalError(PlanError):
    pass


@dataclass(frozen=True)
class EvalContext:
    node_start_time: float = 0.0
    t: float | None = None
    tasks_done: bool = False
    bindings: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True, slots=True)
class EntityValue:
    kind: str
    id: int
    position: Vec2
    heading: float


def _as_id(v: float, what: str) -> int:
    if not float(v).is_integer():
        raise EvalError(f"{what} id must be an integer, got {v}")
    return int(v)


def _position(v: object) -> Vec2:
    return v.position if isinstance(v, EntityValue) else v  # type: ignore[return-value]


def eval_expr(e: Expr, world: WorldState, ctx: EvalContext | None = None) -> float | bool:
    """Evaluate ``e``; numbers come back as float, conditions as bool."""
    return _eval(e, world, ctx or EvalContext())


def _eval(e: Expr, world: WorldState, ctx: EvalContext):
    if isinstance(e, Num):
        return float(e.value)
    if isinstance(e, Var):
        name = e.name
        if name in ctx.bindings:
            return float(ctx.bindings[name])
        if name == "t":
            if ctx.t is None:
                raise EvalError("variable 't' referenced without a binding")
            return float(ctx.t)
        if name == "pi":
            return math.pi
        if name == "true":
            return True
        if name == "false":
            return False
        raise EvalError(f"unbound variable {name!r}")
    if isinstance(e, Unary):
        v = _eval(e.operand, world, ctx)
        return (not v) if e.op == "not" else -v
    if isinstance(e, Binary):
        op = e.op
        if op == "and":
            return bool(_eval(e.left, world, ctx)) and bool(_eval(e.right, world, ctx))
        if op == "or":
            return bool(_eval(e.left, world, ctx)) or bool(_eval(e.right, world, ctx))
        a = _eval(e.left, world, ctx)
        b = _eval(e.right, world, ctx)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0:
                raise EvalError("division by zero")
            return a / b
        if op == "mod":
            return _mod(a, b)
        if op == "==":
            return abs(a - b) <= EQ_TOL
        if op == "!=":
            return abs(a - b) > EQ_TOL
        if op == "<=":
            return a <= b + EQ_TOL
        if op == ">=":
            return a >= b - EQ_TOL
        if op == "<":
            return a < b - EQ_TOL
        if op == ">":
            return a > b + EQ_TOL
        raise EvalError(f"unknown operator {op!r}")
    if isinstance(e, Quant):
        combine = all if e.kind == "all" else any
        lookup = world.robot if e.domain == "robots" else world.object
        for i in e.ids:
            try:
                lookup(i)
            except KeyError:
                raise EvalError(f"unknown {e.domain[:-1]} id {i}") from None

        def body(i: int) -> bool:
            inner = EvalContext(ctx.node_start_time, ctx.t, ctx.tasks_done, {**ctx.bindings, e.var: i})
            return bool(_eval(e.body, world, inner))

        return combine(body(i) for i in e.ids)
    if isinstance(e, Call):
        return _call(e, world, ctx)
    raise EvalError(f"cannot evaluate {e!r}")


def _mod(a: float, b: float) -> float:
    if b == 0:
        raise EvalError("modulo by zero")
    return a - b * math.floor(a / b)


def _call(e: Call, world: WorldState, ctx: EvalContext):
    name = e.name
    if name == "elapsed":
        return world.time - ctx.node_start_time
    if name == "time":
        return world.time
    if name == "mission_tasks_done":
        return ctx.tasks_done
    args = [_eval(a, world, ctx) for a in e.args]
    try:
        if name == "robot":
            r = world.robot(_as_id(args[0], "robot"))
            return EntityValue("robot", r.id, r.position, r.heading)
        if name == "object":
            o = world.object(_as_id(args[0], "object"))
            return EntityValue("object", o.id, o.position, o.heading)
        if name == "region":
            return world.region(_as_id(args[0], "region"))
        if name == "coverage":
            return world.coverage(args[0].id)
    except KeyError as exc:
        raise EvalError(str(exc).strip("'\"")) from None
    if name == "point":
        return Vec2(args[0], args[1])
    if name == "dist":
        a, b = _position(args[0]), args[1]
        if isinstance(b, Region):
            return distance_to_region(a, b)
        return distance(a, _position(b))
    if name == "in_region":
        return point_in_region(_position(args[0]), args[1])
    if name == "heading":
        return args[0].heading
    if name == "x":
        return _position(args[0]).x
    if name == "y":
        return _position(args[0]).y
    if name == "sin":
        return math.sin(args[0])
    if name == "cos":
        return math.cos(args[0])
    if name == "abs":
        return abs(args[0])
    if name == "sqrt":
        if args[0] < 0:
            raise EvalError(f"sqrt of negative number {args[0]}")
        return math.sqrt(args[0])
    if name == "min":
        return min(args[0], args[1])
    if name == "max":
        return max(args[0], args[1])
    if name == "mod":
        return _mod(args[0], args[1])
    if name == "atan2":
        return math.atan2(args[0], args[1])
    raise EvalError(f"unknown function {name!r}")
