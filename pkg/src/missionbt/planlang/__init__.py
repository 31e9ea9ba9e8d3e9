"""Sandboxed condition and plan language."""

from missionbt.planlang.ast import FALSE, TRUE, Expr, Type, to_source
from missionbt.planlang.evaluator import EvalContext, EvalError, eval_expr
from missionbt.planlang.lexer import PlanError, Token, tokenize
from missionbt.planlang.parser import DSLTypeError, ParseError, parse_condition, parse_expr, type_of
from missionbt.planlang.plan import (
    CircleSpec,
    ExecutionPlan,
    LineSpec,
    MetaCall,
    ParametricPath,
    PlanDoc,
    TrackProgram,
    WaypointPath,
    parse_execution,
    parse_plan,
    sample_parametric,
    strip_fences,
)

__all__ = [
    "FALSE", "TRUE", "Expr", "Type", "to_source",
    "EvalContext", "EvalError", "eval_expr",
    "PlanError", "Token", "tokenize",
    "DSLTypeError", "ParseError", "parse_condition", "parse_expr", "type_of",
    "CircleSpec", "ExecutionPlan", "LineSpec", "MetaCall", "ParametricPath", "PlanDoc",
    "TrackProgram", "WaypointPath", "parse_execution", "parse_plan", "sample_parametric",
    "strip_fences",
]
