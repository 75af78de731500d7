"""Recursive-descent parser for the ASCII expression grammar.

::

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := ("-"|"+") factor | atom ("^" uint)?
    atom   := uint | var | "(" expr ")"
    var    := ident ("@" sint)?

Whitespace is ignored.  ``x@k`` is variable ``x`` shifted by ``k`` steps.
"""

from __future__ import annotations

import re
from typing import Iterable, NamedTuple, Optional

from .expr import ONE, RationalExpr, Var

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<var>[A-Za-z][A-Za-z0-9_]*(?:\s*@\s*[+-]?\s*\d+)?)
  | (?P<num>\d+)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


class ParseError(ValueError):
    """Syntax or vocabulary error; ``pos`` is the 0-based character offset."""

    def __init__(self, message: str, pos: int, text: str = ""):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} at position {pos}")


class _Tok(NamedTuple):
    kind: str
    value: str
    pos: int


def _tokenize(text: str) -> list:
    out = []
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {text[i]!r}", i, text)
        if m.lastgroup != "ws":
            out.append(_Tok(m.lastgroup, m.group(), i))
        i = m.end()
    out.append(_Tok("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, vocabulary: Optional[set]):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.vocabulary = vocabulary

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value: str):
        t = self.take()
        if t.value != value:
            what = "end of input" if t.kind == "end" else repr(t.value)
            raise ParseError(f"expected {value!r}, found {what}", t.pos, self.text)

    def error(self, msg: str, tok: _Tok):
        raise ParseError(msg, tok.pos, self.text)

    def parse(self) -> RationalExpr:
        e = self.expr()
        t = self.peek()
        if t.kind != "end":
            self.error(f"unexpected {t.value!r}", t)
        return e

    def expr(self) -> RationalExpr:
        e = self.term()
        while self.peek().value in ("+", "-"):
            op = self.take().value
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self) -> RationalExpr:
        e = self.factor()
        while self.peek().value in ("*", "/"):
            op = self.take()
            start = self.peek()
            rhs = self.factor()
            if op.value == "*":
                e = e * rhs
            else:
                if rhs.is_zero():
                    self.error("division by zero", start)
                e = e / rhs
        return e

    def factor(self) -> RationalExpr:
        # unary signs bind looser than '^', so -x^2 is -(x^2)
        if self.peek().value in ("-", "+"):
            sign = self.take().value
            inner = self.factor()
            return -inner if sign == "-" else inner
        base = self.atom()
        if self.peek().value == "^":
            self.take()
            t = self.take()
            if t.kind != "num":
                self.error("exponent must be an unsigned integer", t)
            return base ** int(t.value) if int(t.value) else ONE
        return base

    def atom(self) -> RationalExpr:
        t = self.take()
        if t.kind == "num":
            return RationalExpr.const(int(t.value))
        if t.kind == "var":
            v = Var.parse(re.sub(r"\s+", "", t.value))
            if self.vocabulary is not None and v not in self.vocabulary:
                self.error(f"unknown variable {v}", t)
            return RationalExpr.var(v)
        if t.value == "(":
            e = self.expr()
            self.expect(")")
            return e
        what = "end of input" if t.kind == "end" else repr(t.value)
        self.error(f"unexpected {what}", t)


def parse_expr(text: str, vocabulary: Optional[Iterable[Var]] = None) -> RationalExpr:
    """Parse ``text`` into a canonical :class:`RationalExpr`.

    When ``vocabulary`` is given every variable (with its shift) must be a
    member of it.
    """
    vocab = None if vocabulary is None else set(vocabulary)
    return _Parser(text, vocab).parse()


def print_expr(e: RationalExpr) -> str:
    return str(e)
