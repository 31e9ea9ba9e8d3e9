"""Recursive-descent parser and static type checker for condition expressions.

Precedence, loosest first: ``or``, ``and``, comparisons (non-chaining),
``+ -``, ``* / mod``, unary ``not`` / ``-``, atoms.
"""

from __future__ import annotations

from missionbt.planlang.ast import (
    COMPARE,
    LOCATED,
    Binary,
    Call,
    Expr,
    Num,
    Quant,
    Type,
    Unary,
    Var,
)
from missionbt.planlang.lexer import PlanError, Token, tokenize


class ParseError(PlanError):
    pass


class DSLTypeError(PlanError):
    pass


N, B, E, P, R = Type.NUM, Type.BOOL, Type.ENTITY, Type.POINT, Type.REGION
LOC = LOCATED
LOC_OR_REGION = LOCATED | {R}

# name -> (argument type sets, result type)
FUNCTIONS: dict[str, tuple[tuple[frozenset[Type], ...], Type]] = {
    "elapsed": ((), N),
    "time": ((), N),
    "mission_tasks_done": ((), B),
    "robot": ((frozenset({N}),), E),
    "object": ((frozenset({N}),), E),
    "point": ((frozenset({N}), frozenset({N})), P),
    "region": ((frozenset({N}),), R),
    "dist": ((LOC, LOC_OR_REGION), N),
    "in_region": ((LOC, frozenset({R})), B),
    "coverage": ((frozenset({R}),), N),
    "heading": ((frozenset({E}),), N),
    "x": ((LOC,), N),
    "y": ((LOC,), N),
    "sin": ((frozenset({N}),), N),
    "cos": ((frozenset({N}),), N),
    "abs": ((frozenset({N}),), N),
    "sqrt": ((frozenset({N}),), N),
    "min": ((frozenset({N}), frozenset({N})), N),
    "max": ((frozenset({N}), frozenset({N})), N),
    "mod": ((frozenset({N}), frozenset({N})), N),
    "atan2": ((frozenset({N}), frozenset({N})), N),
}
CONSTANTS = {"pi": N, "true": B, "false": B}
QUANTIFIERS = ("all", "any")
DOMAINS = ("robots", "objects")


class ExprParser:
    """Token-stream parser; ``PlanParser`` extends it with plan statements."""

    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0

    # -- token helpers -------------------------------------------------
    def peek(self, offset: int = 0) -> Token:
        k = self.pos + offset
        if k < len(self.tokens):
            return self.tokens[k]
        return Token("EOF", "", len(self.text))

    def advance(self) -> Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def check(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind in ("OP", "KEYWORD") and tok.text == text

    def match(self, *texts: str) -> Token | None:
        for text in texts:
            if self.check(text):
                return self.advance()
        return None

    def expect(self, text: str) -> Token:
        if self.check(text):
            return self.advance()
        raise self.error({text})

    def error(self, expected: set[str]) -> ParseError:
        tok = self.peek()
        found = "end of input" if tok.kind == "EOF" else repr(tok.text)
        want = " or ".join(sorted(expected))
        return ParseError(f"expected {want} at column {tok.column}, found {found}")

    def at_end(self) -> bool:
        return self.peek().kind == "EOF"

    # -- grammar -------------------------------------------------------
    def expression(self) -> Expr:
        return self.or_expr()

    def or_expr(self) -> Expr:
        left = self.and_expr()
        while self.match("or"):
            left = Binary("or", left, self.and_expr())
        return left

    def and_expr(self) -> Expr:
        left = self.comparison()
        while self.match("and"):
            left = Binary("and", left, self.comparison())
        return left

    def comparison(self) -> Expr:
        left = self.additive()
        tok = self.match(*COMPARE)
        if tok:
            left = Binary(tok.text, left, self.additive())
        return left

    def additive(self) -> Expr:
        left = self.multiplicative()
        while True:
            tok = self.match("+", "-")
            if not tok:
                return left
            left = Binary(tok.text, left, self.multiplicative())

    def multiplicative(self) -> Expr:
        left = self.unary()
        while True:
            tok = self.match("*", "/", "mod")
            if not tok:
                return left
            left = Binary(tok.text, left, self.unary())

    def unary(self) -> Expr:
        if self.match("not"):
            return Unary("not", self.unary())
        if self.match("-"):
            return Unary("-", self.unary())
        return self.primary()

    def primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.advance()
            text = tok.text
            if any(c in text for c in ".eE"):
                return Num(float(text))
            return Num(int(text))
        if self.match("("):
            inner = self.expression()
            self.expect(")")
            return inner
        if tok.kind == "IDENT" or (tok.kind == "KEYWORD" and tok.text == "mod"):
            self.advance()
            name = tok.text
            if name in QUANTIFIERS and self.check("("):
                return self.quantifier(name)
            if self.match("("):
                args: list[Expr] = []
                if not self.check(")"):
                    args.append(self.expression())
                    while self.match(","):
                        args.append(self.expression())
                self.expect(")")
                return Call(name, tuple(args))
            return Var(name)
        raise self.error({"number", "identifier", "(", "-", "not"})

    def quantifier(self, kind: str) -> Expr:
        self.expect("(")
        var = "i"
        if self.peek().kind == "IDENT" and self.peek(1).text == ":":
            var = self.advance().text
            self.advance()
        dom = self.peek()
        if dom.kind != "IDENT" or dom.text not in DOMAINS:
            raise self.error(set(DOMAINS))
        self.advance()
        self.expect("in")
        ids = tuple(self.int_list())
        self.expect(",")
        body = self.expression()
        self.expect(")")
        return Quant(kind, dom.text, ids, body, var)

    def int_literal(self) -> int:
        tok = self.peek()
        if tok.kind != "NUMBER" or not tok.text.isdigit():
            raise self.error({"integer"})
        self.advance()
        return int(tok.text)

    def int_list(self) -> list[int]:
        self.expect("[")
        out: list[int] = []
        if not self.check("]"):
            out.append(self.int_literal())
            while self.match(","):
                out.append(self.int_literal())
        self.expect("]")
        return out


def _describe(types: frozenset[Type]) -> str:
    return " or ".join(sorted(t.value for t in types))


def type_of(e: Expr, scope: frozenset[str] = frozenset({"t"})) -> Type:
    """Static type of ``e``; raises DSLTypeError on ill-typed input.

    ``scope`` lists the numeric variables visible at this point.
    """
    if isinstance(e, Num):
        return N
    if isinstance(e, Var):
        if e.name in CONSTANTS:
            return CONSTANTS[e.name]
        if e.name in scope:
            return N
        raise DSLTypeError(f"unknown variable {e.name!r}")
    if isinstance(e, Call):
        if e.name not in FUNCTIONS:
            raise DSLTypeError(f"unknown function {e.name!r}")
        params, result = FUNCTIONS[e.name]
        if len(e.args) != len(params):
            raise DSLTypeError(
                f"{e.name}() takes {len(params)} argument(s), got {len(e.args)}"
            )
        for k, (arg, allowed) in enumerate(zip(e.args, params)):
            got = type_of(arg, scope)
            if got not in allowed:
                raise DSLTypeError(
                    f"{e.name}() argument {k + 1} must be {_describe(allowed)}, got {got.value}"
                )
        return result
    if isinstance(e, Unary):
        got = type_of(e.operand, scope)
        want = B if e.op == "not" else N
        if got is not want:
            raise DSLTypeError(f"operand of {e.op!r} must be {want.value}, got {got.value}")
        return want
    if isinstance(e, Binary):
        lt, rt = type_of(e.left, scope), type_of(e.right, scope)
        if e.op in ("and", "or"):
            if lt is not B or rt is not B:
                raise DSLTypeError(
                    f"operands of {e.op!r} must be boolean, got {lt.value} and {rt.value}"
                )
            return B
        if lt is not N or rt is not N:
            raise DSLTypeError(
                f"operands of {e.op!r} must be numbers, got {lt.value} and {rt.value}"
            )
        return B if e.op in COMPARE else N
    if isinstance(e, Quant):
        body = type_of(e.body, scope | {e.var})
        if body is not B:
            raise DSLTypeError(f"{e.kind}() body must be boolean, got {body.value}")
        return B
    raise DSLTypeError(f"not an expression: {e!r}")


def parse_expr(text: str, expect: Type | None = None) -> Expr:
    """Parse and type-check one expression."""
    parser = ExprParser(text)
    if parser.at_end():
        raise ParseError("empty expression")
    expr = parser.expression()
    if not parser.at_end():
        raise parser.error({"end of input"})
    got = type_of(expr)
    if expect is not None and got is not expect:
        raise DSLTypeError(f"expected a {expect.value} expression, got {got.value}")
    return expr


def parse_condition(text: str) -> Expr:
    return parse_expr(text, Type.BOOL)

