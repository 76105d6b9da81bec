"""Expression language: variable layouts, the AST and a recursive-descent parser.

The grammar (see ``docs/grammar.md``) is ordinary infix arithmetic with
``^`` binding tighter than unary minus, so ``-y1^2`` is ``-(y1^2)``.
Variables are ``x1..xn``, ``y1..yn`` (first velocity block), ``yA_i`` for
the block of order A, and ``p1..pn`` on the cotangent side.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import DomainViolation, NonIntegerExponent, ParseError, UnknownVariable

UNARY_FUNCS = ("sqrt", "exp", "log", "sin", "cos")


@dataclass(frozen=True)
class VarLayout:
    """Canonical ordering of coordinates.

    Tangent side: x_1..x_n, then the velocity blocks y^(1), ..., y^(k).
    Cotangent side: x_1..x_n, p_1..p_n.
    """

    n: int
    k: int = 1
    side: str = "tangent"

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise ValueError("layout needs n >= 1 and k >= 1")
        if self.side not in ("tangent", "cotangent"):
            raise ValueError(f"unknown side {self.side!r}")
        if self.side == "cotangent" and self.k != 1:
            raise ValueError("cotangent layouts have k = 1")

    @property
    def size(self) -> int:
        return (self.k + 1) * self.n if self.side == "tangent" else 2 * self.n

    @property
    def names(self) -> list[str]:
        out = [f"x{i + 1}" for i in range(self.n)]
        if self.side == "cotangent":
            return out + [f"p{i + 1}" for i in range(self.n)]
        for a in range(1, self.k + 1):
            out += [f"y{a}_{i + 1}" for i in range(self.n)]
        return out

    def x(self) -> slice:
        return slice(0, self.n)

    def y(self, alpha: int = 1) -> slice:
        if self.side != "tangent" or not 1 <= alpha <= self.k:
            raise ValueError(f"no velocity block of order {alpha} in {self}")
        return slice(alpha * self.n, (alpha + 1) * self.n)

    def p(self) -> slice:
        if self.side != "cotangent":
            raise ValueError("momenta exist only on the cotangent side")
        return slice(self.n, 2 * self.n)

    def lookup(self, name: str) -> Optional[int]:
        """0-based index of a variable token, or None."""
        m = re.fullmatch(r"([xyp])(\d+)(?:_(\d+))?", name)
        if not m:
            return None
        letter, a, b = m.group(1), int(m.group(2)), m.group(3)
        if letter == "y" and self.side == "tangent":
            alpha, i = (1, a) if b is None else (a, int(b))
            if 1 <= alpha <= self.k and 1 <= i <= self.n:
                return alpha * self.n + i - 1
            return None
        if b is not None:
            return None
        if letter == "x" and 1 <= a <= self.n:
            return a - 1
        if letter == "p" and self.side == "cotangent" and 1 <= a <= self.n:
            return self.n + a - 1
        return None


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Expr:
    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    index: int
    name: str = field(default="", compare=False)


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # neg, sqrt, exp, log, sin, cos
    arg: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str  # add, sub, mul, div
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/"}
_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2}


def to_text(e: Expr) -> str:
    """Render an AST back to parseable text (minimal parentheses)."""

    def rec(node, prec):
        if isinstance(node, Const):
            v = node.value
            s = repr(int(v)) if float(v).is_integer() and abs(v) < 1e15 else repr(v)
            return f"({s})" if v < 0 else s
        if isinstance(node, Var):
            return node.name or f"v{node.index}"
        if isinstance(node, Pow):
            s = f"{rec(node.base, 4)}^{node.exponent}" if node.exponent >= 0 else \
                f"{rec(node.base, 4)}^({node.exponent})"
            return s
        if isinstance(node, Unary):
            if node.op == "neg":
                s = "-" + rec(node.arg, 3)
                return f"({s})" if prec > 2 else s
            return f"{node.op}({rec(node.arg, 0)})"
        p = _PREC[node.op]
        right_prec = p + 1 if node.op in ("sub", "div", "mul") else p
        s = f"{rec(node.left, p)} {_SYMBOL[node.op]} {rec(node.right, right_prec)}"
        return f"({s})" if p < prec else s

    return rec(e, 0)


# -- parser ------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(text: str):
    toks, pos = [], 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[start]!r}", _byte(text, start), text)
        kind = m.lastgroup
        value = m.group(kind)
        toks.append((kind, "^" if value == "**" else value, m.start(kind)))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


def _byte(text: str, char_pos: int) -> int:
    return len(text[:char_pos].encode("utf-8"))


class _Parser:
    def __init__(self, text, layout, params):
        self.text = text
        self.layout = layout
        self.params = dict(params or {})
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, tok, msg=None):
        kind, value, pos = tok
        if msg is None:
            msg = "unexpected end of input" if kind == "end" else f"unexpected token {value!r}"
        raise ParseError(msg, _byte(self.text, pos), self.text)

    def expect(self, value):
        tok = self.take()
        if tok[1] != value or tok[0] == "num":
            self.fail(tok, f"expected {value!r}")
        return tok

    def parse(self):
        e = self.expr()
        if self.peek()[0] != "end":
            self.fail(self.peek())
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = "add" if self.take()[1] == "+" else "sub"
            e = Binary(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = "mul" if self.take()[1] == "*" else "div"
            e = Binary(op, e, self.unary())
        return e

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("-", "+"):
            self.take()
            arg = self.unary()
            if tok[1] == "+":
                return arg
            if isinstance(arg, Const):
                return Const(-arg.value)
            return Unary("neg", arg)
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            self.take()
            etok = self.peek()
            ex = _fold(self.unary())
            if not isinstance(ex, Const) or not float(ex.value).is_integer():
                raise NonIntegerExponent("exponent must be an integer constant",
                                         _byte(self.text, etok[2]), self.text)
            return Pow(base, int(ex.value))
        return base

    def primary(self):
        tok = self.take()
        kind, value, pos = tok
        if kind == "num":
            return Const(float(value))
        if kind == "name":
            if value in UNARY_FUNCS or value == "neg":
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                if value == "neg":
                    return Unary("neg", arg)
                return Unary(value, arg)
            idx = self.layout.lookup(value)
            if idx is not None:
                return Var(idx, value)
            if value in self.params:
                return Const(float(self.params[value]))
            if value == "pi":
                return Const(math.pi)
            raise UnknownVariable(value, _byte(self.text, pos), self.text)
        if value == "(":
            e = self.expr()
            self.expect(")")
            return e
        self.fail(tok)


def _fold(e: Expr) -> Expr:
    """Collapse a variable-free subtree to a constant."""
    if isinstance(e, Const) or variables(e):
        return e
    try:
        return Const(evaluate(e, ()))
    except DomainViolation:
        return e


def parse_expr(text: str, layout: VarLayout, params: Optional[Mapping[str, float]] = None) -> Expr:
    """Parse ``text`` against ``layout``. Named ``params`` are folded in as constants."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0, text)
    return _Parser(text, layout, params).parse()


def variables(e: Expr) -> set[int]:
    """Indices of the variables the expression actually depends on."""
    if isinstance(e, Var):
        return {e.index}
    if isinstance(e, Const):
        return set()
    if isinstance(e, Unary):
        return variables(e.arg)
    if isinstance(e, Pow):
        return variables(e.base)
    return variables(e.left) | variables(e.right)


# -- plain evaluation --------------------------------------------------------


def _codegen(e: Expr, mod: str) -> str:
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, Var):
        return f"v[{e.index}]"
    if isinstance(e, Unary):
        a = _codegen(e.arg, mod)
        return f"(-{a})" if e.op == "neg" else f"{mod}.{e.op}({a})"
    if isinstance(e, Pow):
        b = _codegen(e.base, mod)
        if e.exponent == 2:
            return f"({b}*{b})"
        return f"({b})**{e.exponent}" if e.exponent >= 0 else f"(1.0/({b})**{-e.exponent})"
    return f"({_codegen(e.left, mod)} {_SYMBOL[e.op]} {_codegen(e.right, mod)})"


_compiled: dict = {}


def _compile(e: Expr, vectorized: bool) -> Callable:
    key = (e, vectorized)
    fn = _compiled.get(key)
    if fn is None:
        src = f"lambda v: {_codegen(e, '_np' if vectorized else '_m')}"
        fn = eval(src, {"_m": math, "_np": np})  # generated from our own AST only
        if len(_compiled) > 4096:
            _compiled.clear()
        _compiled[key] = fn
    return fn


def _locate_violation(e: Expr, v) -> None:
    """Walk the tree to find the innermost failing node and raise DomainViolation."""

    def rec(node):
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Var):
            return float(v[node.index])
        if isinstance(node, Unary):
            a = rec(node.arg)
            if node.op == "sqrt" and a < 0:
                raise DomainViolation(to_text(node), "square root of a negative value")
            if node.op == "log" and a <= 0:
                raise DomainViolation(to_text(node), "logarithm of a non-positive value")
            return -a if node.op == "neg" else getattr(math, node.op)(a)
        if isinstance(node, Pow):
            b = rec(node.base)
            if b == 0 and node.exponent < 0:
                raise DomainViolation(to_text(node), "negative power of zero")
            return b ** node.exponent
        a, b = rec(node.left), rec(node.right)
        if node.op == "div" and b == 0:
            raise DomainViolation(to_text(node), "division by zero")
        if node.op == "add":
            return a + b
        if node.op == "sub":
            return a - b
        return a * b if node.op == "mul" else a / b

    rec(e)
    raise DomainViolation(to_text(e), "evaluation failed")


def evaluate(e: Expr, point: Sequence[float]) -> float:
    """Plain float evaluation (fast path, no derivatives)."""
    try:
        return float(_compile(e, False)(point))
    except (ValueError, ZeroDivisionError, OverflowError):
        _locate_violation(e, point)


def evaluate_many(e: Expr, points: np.ndarray) -> np.ndarray:
    """Vectorized evaluation over rows of ``points``."""
    pts = np.asarray(points, dtype=float)
    cols = [pts[:, i] for i in range(pts.shape[1])]
    with np.errstate(all="ignore"):
        out = _compile(e, True)(cols)
    return np.broadcast_to(np.asarray(out, dtype=float), (pts.shape[0],)).copy()
