"""Tiny expression language for prescribing Gauss maps on the command line.

Grammar (whitespace-insensitive):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom (('^' | '**') unary)?          right-associative
    atom   := NUMBER | 'i' | 'u' | 'v'
            | FUNC '(' expr ')' | '(' expr ')'

with FUNC one of sin cos tan atan sinh cosh tanh exp ln.  Everything
evaluates over complex numpy arrays, so e.g. "tanh(u+i*v)" is fine.
"""

from __future__ import annotations

import re

import numpy as np

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "atan": np.arctan,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "exp": np.exp,
    "ln": np.log,
}

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<pow>\*\*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


class ExpressionError(ValueError):
    """Parse or evaluation failure, carrying the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


def _tokenize(src: str):
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ExpressionError(f"unexpected character {src[pos]!r}", pos)
        if m.lastgroup != "ws":
            kind = "op" if m.lastgroup == "pow" else m.lastgroup
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.k = 0

    def peek(self):
        return self.tokens[self.k]

    def take(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect_op(self, op):
        kind, text, pos = self.peek()
        if kind != "op" or text != op:
            raise ExpressionError(f"expected {op!r}", pos)
        return self.take()

    def parse(self):
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected {text!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.take()
                rhs = self.term()
                node = (_add if text == "+" else _sub)(node, rhs)
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.take()
                rhs = self.unary()
                node = (_mul if text == "*" else _div)(node, rhs)
            else:
                return node

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text in "+-":
            self.take()
            inner = self.unary()
            return inner if text == "+" else _neg(inner)
        return self.power()

    def power(self):
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text in ("^", "**"):
            self.take()
            exponent = self.unary()
            return _pow(base, exponent)
        return base

    def atom(self):
        kind, text, pos = self.take()
        if kind == "number":
            val = complex(float(text))
            return lambda u, v: val
        if kind == "name":
            if text == "i":
                return lambda u, v: 1j
            if text == "u":
                return lambda u, v: u
            if text == "v":
                return lambda u, v: v
            fn = FUNCTIONS.get(text)
            if fn is None:
                raise ExpressionError(f"unknown name {text!r}", pos)
            self.expect_op("(")
            arg = self.expr()
            self.expect_op(")")
            return _call(fn, arg)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExpressionError(f"unexpected {text!r}" if text else "unexpected end",
                              pos)


def _add(a, b):
    return lambda u, v: a(u, v) + b(u, v)


def _sub(a, b):
    return lambda u, v: a(u, v) - b(u, v)


def _mul(a, b):
    return lambda u, v: a(u, v) * b(u, v)


def _div(a, b):
    return lambda u, v: a(u, v) / b(u, v)


def _neg(a):
    return lambda u, v: -a(u, v)


def _pow(a, b):
    return lambda u, v: a(u, v) ** b(u, v)


def _call(fn, a):
    return lambda u, v: fn(a(u, v))


class Expression:
    """Compiled expression over grid coordinates u, v."""

    def __init__(self, source: str):
        self.source = source
        self._fn = _Parser(source).parse()

    def __call__(self, u, v):
        uu = np.asarray(u, dtype=complex)
        vv = np.asarray(v, dtype=complex)
        with np.errstate(all="ignore"):
            out = self._fn(uu, vv)
        return np.broadcast_to(np.asarray(out, dtype=complex), uu.shape).copy()

    def __repr__(self):
        return f"Expression({self.source!r})"


def parse_expression(source: str) -> Expression:
    return Expression(source)
