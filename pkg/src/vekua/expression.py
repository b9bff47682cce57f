"""A small arithmetic language for coefficients.

Grammar (``^`` binds tighter than unary minus and is right associative)::

    expr  := term (("+" | "-") term)*
    term  := unary (("*" | "/") unary)*
    unary := ("-" | "+") unary | power
    power := atom ("^" unary)?
    atom  := NUMBER | NUMBER "i" | NAME | NAME "(" expr ")" | "(" expr ")"

Names are ``z``, ``zbar``, ``i``, ``pi``, ``theta`` (profiles only) and the
per-point ``r_j``, ``theta_j`` (``j >= 1``). Functions: exp, log, sin, cos,
conj, abs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ExpressionError

FUNCTIONS = {
    "exp": np.exp,
    "log": np.log,
    "sin": np.sin,
    "cos": np.cos,
    "conj": np.conj,
    "abs": lambda x: np.abs(x).astype(complex),
}
CONSTANTS = {"i": 1j, "pi": np.pi + 0j}
_POINT_VAR = re.compile(r"(r|theta)_([1-9][0-9]*)$")


@dataclass(frozen=True)
class Num:
    value: complex


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?i?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


def _tokenize(source: str):
    pos, line, col = 0, 1, 1
    out = []
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ExpressionError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            out.append((kind, text, line, col))
        for ch in text:
            if ch == "\n":
                line, col = line + 1, 1
            else:
                col += 1
        pos = m.end()
    out.append(("end", "", line, col))
    return out


class _Parser:
    def __init__(self, source: str, names):
        self.toks = _tokenize(source)
        self.k = 0
        self.names = names

    def peek(self):
        return self.toks[self.k]

    def take(self, text=None):
        tok = self.toks[self.k]
        if text is not None and tok[1] != text:
            where = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ExpressionError(f"expected {text!r}, found {where}", tok[2], tok[3])
        self.k += 1
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExpressionError(f"unexpected {tok[1]!r}", tok[2], tok[3])
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Bin(op, node, self.unary())
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("-", "+"):
            self.take()
            return Unary(tok[1], self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return Bin("^", base, self.unary())
        return base

    def atom(self):
        kind, text, line, col = self.take()
        if kind == "num":
            if text.endswith("i"):
                return Num(complex(0, float(text[:-1])))
            return Num(complex(float(text)))
        if kind == "name":
            if text in FUNCTIONS:
                self.take("(")
                arg = self.expr()
                self.take(")")
                return Call(text, arg)
            if text in CONSTANTS or text in self.names or _POINT_VAR.match(text):
                return Var(text)
            raise ExpressionError(f"unknown identifier {text!r}", line, col)
        if text == "(":
            node = self.expr()
            self.take(")")
            return node
        where = "end of input" if kind == "end" else repr(text)
        raise ExpressionError(f"unexpected {where}", line, col)


def parse_expression(source: str, names=("z", "zbar", "theta")):
    """Parse ``source`` into an AST; errors carry line and column."""
    if not isinstance(source, str):
        raise ExpressionError("expression must be a string")
    return _Parser(source, set(names)).parse()


def _num_text(v: complex) -> str:
    if v.imag == 0:
        return repr(float(v.real))
    if v.real == 0:
        return repr(float(v.imag)) + "i"
    return f"({v.real!r}+{v.imag!r}i)"


def print_expression(node) -> str:
    """Canonical fully parenthesised text; reparses to an equal AST."""
    if isinstance(node, Num):
        return _num_text(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        return f"({node.op}{print_expression(node.arg)})"
    if isinstance(node, Bin):
        return f"({print_expression(node.left)}{node.op}{print_expression(node.right)})"
    if isinstance(node, Call):
        return f"{node.fn}({print_expression(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def _variable(name, z, points, theta):
    if name in CONSTANTS:
        return np.full(z.shape, CONSTANTS[name])
    if name == "z":
        return z
    if name == "zbar":
        return np.conj(z)
    if name == "theta":
        if theta is None:
            raise ExpressionError("'theta' is only defined in profile expressions")
        return np.asarray(theta, dtype=float).astype(complex)
    m = _POINT_VAR.match(name)
    j = int(m.group(2))
    if j > len(points):
        raise ExpressionError(f"{name!r} refers to point {j} but only {len(points)} exist")
    d = z - points[j - 1]
    if m.group(1) == "r":
        return np.abs(d).astype(complex)
    return np.mod(np.angle(d), 2 * np.pi).astype(complex)


def evaluate(node, z=0j, points=(), theta=None) -> np.ndarray:
    """Evaluate an AST at complex points ``z`` (array) around singular ``points``."""
    z = np.asarray(z, dtype=complex)
    if theta is not None:
        z = np.broadcast_to(z, np.shape(theta)).astype(complex)
    points = [complex(p) for p in points]

    def ev(n):
        if isinstance(n, Num):
            return np.full(z.shape, n.value)
        if isinstance(n, Var):
            return _variable(n.name, z, points, theta)
        if isinstance(n, Unary):
            a = ev(n.arg)
            return -a if n.op == "-" else a
        if isinstance(n, Call):
            a = ev(n.arg)
            if n.fn == "log" and np.any(a == 0):
                raise ExpressionError("log of zero")
            return FUNCTIONS[n.fn](a)
        a, b = ev(n.left), ev(n.right)
        if n.op == "+":
            return a + b
        if n.op == "-":
            return a - b
        if n.op == "*":
            return a * b
        if n.op == "/":
            if np.any(b == 0):
                raise ExpressionError("division by zero")
            return a / b
        if np.any((a == 0) & (b.real < 0)):
            raise ExpressionError("zero raised to a negative power")
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(a == 0, np.where(b == 0, 1, 0), a ** np.where(a == 0, 1, b))
        return out.astype(complex)

    return ev(node)


class Expression:
    """Parsed expression with its source text, callable on complex arrays."""

    def __init__(self, source: str, points=(), names=("z", "zbar", "theta")):
        self.source = source
        self.ast = parse_expression(source, names)
        self.points = tuple(complex(p) for p in points)

    def __repr__(self):
        return f"Expression({self.source!r})"

    def __call__(self, z):
        return evaluate(self.ast, z, self.points)

    def profile(self, theta):
        return evaluate(self.ast, 0j, self.points, theta=theta)

    def __str__(self):
        return print_expression(self.ast)
