"""Tokenizer for the condition and plan language."""

from __future__ import annotations

import re
from dataclasses import dataclass


class PlanError(ValueError):
    """Any lexing, parsing, typing, id-resolution or evaluation failure.

    ``diagnostics`` holds one line per problem, phrased so it can be pasted
    back into a repair prompt.
    """

    def __init__(self, message: str, diagnostics: list[str] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or [message]


class LexError(PlanError):
    pass


KEYWORDS = frozenset({"and", "or", "not", "in", "mod"})


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # NUMBER | IDENT | KEYWORD | OP | EOF
    text: str
    pos: int  # 0-based offset

    @property
    def column(self) -> int:
        return self.pos + 1


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|==|!=|[<>+\-*/()\[\],=;:])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    """Split ``text`` into tokens (no trailing EOF token)."""
    tokens: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise LexError(f"illegal character {text[pos]!r} at column {pos + 1}")
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "number":
            tokens.append(Token("NUMBER", lexeme, pos))
        elif kind == "ident":
            tokens.append(Token("KEYWORD" if lexeme in KEYWORDS else "IDENT", lexeme, pos))
        elif kind == "op":
            tokens.append(Token("OP", lexeme, pos))
        pos = m.end()
    return tokens
