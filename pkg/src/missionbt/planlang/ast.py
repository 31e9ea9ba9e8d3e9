"""Expression AST, static types and the canonical printer."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Union


class Type(enum.Enum):
    NUM = "number"
    BOOL = "boolean"
    ENTITY = "entity"  # robot or object
    POINT = "point"
    REGION = "region"


LOCATED = frozenset({Type.ENTITY, Type.POINT})


@dataclass(frozen=True, slots=True)
class Num:
    value: int | float


@dataclass(frozen=True, slots=True)
class Var:
    name: str  # "t", a quantifier variable, or a constant (pi, true, false)


@dataclass(frozen=True, slots=True)
class Call:
    name: str
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True, slots=True)
class Unary:
    op: str  # "not" | "-"
    operand: Expr


@dataclass(frozen=True, slots=True)
class Binary:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Quant:
    kind: str  # "all" | "any"
    domain: str  # "robots" | "objects"
    ids: tuple[int, ...]
    body: Expr
    var: str = "i"


Expr = Union[Num, Var, Call, Unary, Binary, Quant]

ARITH = ("+", "-", "*", "/", "mod")
COMPARE = ("<", "<=", ">", ">=", "==", "!=")
LOGIC = ("and", "or")

PRECEDENCE = {
    "or": 1,
    "and": 2,
    **{op: 3 for op in COMPARE},
    "+": 4,
    "-": 4,
    "*": 5,
    "/": 5,
    "mod": 5,
}
UNARY_PREC = 6
ATOM_PREC = 7


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return PRECEDENCE[e.op]
    if isinstance(e, Unary):
        return UNARY_PREC
    return ATOM_PREC


def _num_text(v: int | float) -> str:
    return repr(v)


def to_source(e: Expr) -> str:
    """Render an expression with the minimum parentheses needed to reparse it."""
    if isinstance(e, Num):
        return _num_text(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.name}({', '.join(to_source(a) for a in e.args)})"
    if isinstance(e, Quant):
        ids = ", ".join(str(i) for i in e.ids)
        head = f"{e.var}: " if e.var != "i" else ""
        return f"{e.kind}({head}{e.domain} in [{ids}], {to_source(e.body)})"
    if isinstance(e, Unary):
        inner = to_source(e.operand)
        if _prec(e.operand) < UNARY_PREC:
            inner = f"({inner})"
        return f"not {inner}" if e.op == "not" else f"-{inner}"
    p = PRECEDENCE[e.op]
    left = to_source(e.left)
    right = to_source(e.right)
    left_p = _prec(e.left)
    # comparisons do not chain, so an equal-precedence left operand needs parens too
    if left_p < p or (left_p == p and e.op in COMPARE):
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {e.op} {right}"


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    if isinstance(e, Call):
        for a in e.args:
            yield from walk(a)
    elif isinstance(e, Unary):
        yield from walk(e.operand)
    elif isinstance(e, Binary):
        yield from walk(e.left)
        yield from walk(e.right)
    elif isinstance(e, Quant):
        yield from walk(e.body)


def referenced_ids(e: Expr) -> dict[str, set[int]]:
    """Literal entity ids an expression names (quantifier domains included)."""
    out: dict[str, set[int]] = {"robots": set(), "objects": set(), "regions": set()}
    key = {"robot": "robots", "object": "objects", "region": "regions"}
    for node in walk(e):
        if isinstance(node, Call) and node.name in key and node.args:
            arg = node.args[0]
            if isinstance(arg, Num) and float(arg.value).is_integer():
                out[key[node.name]].add(int(arg.value))
        elif isinstance(node, Quant):
            out[node.domain].update(node.ids)
    return out


FALSE: Expr = Var("false")
TRUE: Expr = Var("true")
