"""Small arithmetic expression language used for field components.

Expressions are parsed once into an immutable tree and evaluated on numpy
arrays.  Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Exponentiation is right associative and binds tighter than unary minus, so
``-x^2`` is ``-(x^2)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

import numpy as np


class ExpressionError(ValueError):
    """Raised for malformed expressions; ``offset`` is the 0-based column."""

    def __init__(self, message, offset=None, text=None):
        self.offset = offset
        self.text = text
        if offset is not None:
            message = f"{message} at offset {offset}"
        super().__init__(message)


FUNCTIONS = {
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "tan": (1, np.tan),
    "exp": (1, np.exp),
    "log": (1, np.log),
    "sqrt": (1, np.sqrt),
    "abs": (1, np.abs),
    "pow": (2, np.power),
    "atan2": (2, np.arctan2),
    "max": (2, np.maximum),
    "min": (2, np.minimum),
}

CONSTANTS = {"pi": np.pi}

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),])"
    r")"
)


@dataclass(frozen=True)
class Num:
    value: float

    def eval(self, env):
        return self.value

    def names(self):
        return set()

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Name:
    name: str

    def eval(self, env):
        if self.name in env:
            return env[self.name]
        return CONSTANTS[self.name]

    def names(self):
        return set() if self.name in CONSTANTS else {self.name}

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Neg:
    operand: object

    def eval(self, env):
        return -self.operand.eval(env)

    def names(self):
        return self.operand.names()

    def __str__(self):
        return f"(-{self.operand})"


_BINARY = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object

    def eval(self, env):
        return _BINARY[self.op](self.left.eval(env), self.right.eval(env))

    def names(self):
        return self.left.names() | self.right.names()

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple

    def eval(self, env):
        return FUNCTIONS[self.func][1](*(a.eval(env) for a in self.args))

    def names(self):
        out = set()
        for a in self.args:
            out |= a.names()
        return out

    def __str__(self):
        return f"{self.func}({', '.join(str(a) for a in self.args)})"


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExpressionError(f"unexpected character {text[bad]!r}", bad, text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        raise ExpressionError(message, tok[2], self.text)

    def expect(self, value):
        tok = self.peek()
        if tok[1] != value or tok[0] == "end":
            self.fail(f"expected {value!r}")
        return self.advance()

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected token {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("+", "-"):
            self.advance()
            operand = self.unary()
            return Neg(operand) if tok[1] == "-" else operand
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("^", "**"):
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.advance()
        kind, value, offset = tok
        if kind == "num":
            return Num(float(value))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if value not in FUNCTIONS:
                    raise ExpressionError(f"unknown function {value!r}", offset, self.text)
                self.advance()
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                arity = FUNCTIONS[value][0]
                if len(args) != arity:
                    raise ExpressionError(
                        f"{value} takes {arity} argument(s), got {len(args)}", offset, self.text
                    )
                return Call(value, tuple(args))
            if value in FUNCTIONS:
                raise ExpressionError(f"function {value!r} used without arguments", offset, self.text)
            return Name(value)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            raise ExpressionError("unexpected end of expression", offset, self.text)
        raise ExpressionError(f"unexpected token {value!r}", offset, self.text)


class Expression:
    """A parsed expression bound to a set of allowed free names."""

    def __init__(self, text, allowed=None):
        self.text = str(text)
        self.tree = _Parser(self.text).parse()
        if allowed is not None:
            unknown = sorted(self.tree.names() - set(allowed))
            if unknown:
                name = unknown[0]
                m = re.search(rf"\b{re.escape(name)}\b", self.text)
                raise ExpressionError(
                    f"unknown variable {name!r}", m.start() if m else None, self.text
                )

    @property
    def names(self):
        return self.tree.names()

    def __call__(self, env: Mapping[str, object]):
        with np.errstate(all="ignore"):
            return self.tree.eval(env)

    def __repr__(self):
        return f"Expression({self.text!r})"


def parse(text, allowed=None):
    return Expression(text, allowed)
