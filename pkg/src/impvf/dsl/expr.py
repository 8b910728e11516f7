"""Arithmetic expression language: tokenizer, precedence-climbing parser,
printer and two evaluators (scalar via ``math``, vectorized via numpy).

Grammar, loosest binding first::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right-associative
    atom    := NUMBER | NAME | NAME '[' INT ']' | NAME '(' args ')' | '(' expr ')'

So ``-2^2 == -4`` and ``2^3^2 == 512``.
"""

from __future__ import annotations

import math
import operator
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

import numpy as np

from ..errors import (EvalError, ExprSyntaxError, IndexOutOfRange, UnboundVariable,
                      UnknownVariable)

SCALAR_VARS = frozenset({"tau", "sigma", "varsigma", "b"})
STATE_VARS = frozenset({"w", "y1", "y2"})
FUNCTIONS = {
    "sin": 1, "cos": 1, "exp": 1, "log": 1, "abs": 1, "sqrt": 1,
    "min": 2, "max": 2,
}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Index:
    name: str
    index: int


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expr", ...]


Expr = Union[Num, Var, Index, Neg, BinOp, Call]


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()\[\],])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, allowed: frozenset[str], dim: int):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0
        self.allowed = allowed
        self.dim = dim

    def peek(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.advance()
        if tok.text != text:
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", tok.pos, self.text)
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {tok.text!r}", tok.pos, self.text)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek().text in ("+", "-"):
            op = self.advance().text
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.advance().text
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.peek().text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek().text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.advance()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.text == "(":
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "name":
            return self.name(tok)
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExprSyntaxError(f"expected a number, name or '(', found {found}", tok.pos, self.text)

    def name(self, tok: Token) -> Expr:
        name = tok.text
        if name in FUNCTIONS:
            self.expect("(")
            args = [self.expr()]
            while self.peek().text == ",":
                self.advance()
                args.append(self.expr())
            self.expect(")")
            if len(args) != FUNCTIONS[name]:
                raise ExprSyntaxError(
                    f"{name}() takes {FUNCTIONS[name]} argument(s), got {len(args)}", tok.pos, self.text)
            return Call(name, tuple(args))
        if name in STATE_VARS:
            if name not in self.allowed:
                raise UnknownVariable(f"variable {name!r} is not allowed here", tok.pos, self.text)
            self.expect("[")
            idx_tok = self.advance()
            if idx_tok.kind != "num" or not idx_tok.text.isdigit():
                raise ExprSyntaxError(f"{name}[...] needs a nonnegative integer index", idx_tok.pos, self.text)
            self.expect("]")
            idx = int(idx_tok.text)
            if idx >= self.dim:
                raise IndexOutOfRange(
                    f"index {name}[{idx}] out of range for dimension {self.dim}", idx_tok.pos, self.text)
            return Index(name, idx)
        if name in SCALAR_VARS:
            if name not in self.allowed:
                raise UnknownVariable(f"variable {name!r} is not allowed here", tok.pos, self.text)
            return Var(name)
        raise UnknownVariable(f"unknown identifier {name!r}", tok.pos, self.text)


ALL_VARS = SCALAR_VARS | STATE_VARS


def parse_expression(text: str, allowed_vars: Iterable[str] = ALL_VARS, d: int = 1) -> Expr:
    """Parse ``text`` into an AST, rejecting names outside ``allowed_vars``
    and state indices ``>= d``."""
    return _Parser(text, frozenset(allowed_vars), d).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def to_source(e: Expr) -> str:
    """Print an expression; reparsing yields a structurally identical AST."""
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Index):
        return f"{e.name}[{e.index}]"
    if isinstance(e, Neg):
        return f"(-{to_source(e.operand)})"
    if isinstance(e, BinOp):
        return f"({to_source(e.left)} {e.op} {to_source(e.right)})"
    if isinstance(e, Call):
        return f"{e.func}({', '.join(to_source(a) for a in e.args)})"
    raise TypeError(f"not an expression node: {e!r}")


def variables(e: Expr) -> frozenset[str]:
    """Names referenced by ``e`` (state accessors reported by base name)."""
    if isinstance(e, Var):
        return frozenset({e.name})
    if isinstance(e, Index):
        return frozenset({e.name})
    if isinstance(e, Neg):
        return variables(e.operand)
    if isinstance(e, BinOp):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Call):
        out = frozenset()
        for a in e.args:
            out |= variables(a)
        return out
    return frozenset()


def is_zero_literal(e: Expr) -> bool:
    return isinstance(e, Num) and e.value == 0.0


# -- scalar evaluation ------------------------------------------------------

_SCALAR_BIN = {"+": operator.add, "-": operator.sub, "*": operator.mul,
               "/": operator.truediv, "^": math.pow}
_SCALAR_FUN = {"sin": math.sin, "cos": math.cos, "exp": math.exp, "log": math.log,
               "abs": abs, "sqrt": math.sqrt, "min": min, "max": max}


def _lookup(env: Mapping, name: str):
    try:
        return env[name]
    except KeyError:
        raise UnboundVariable(f"variable {name!r} is not bound") from None


def eval_expression(e: Expr, env: Mapping) -> float:
    """IEEE double evaluation; any domain error or non-finite value raises EvalError."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return float(_lookup(env, e.name))
    if isinstance(e, Index):
        return float(_lookup(env, e.name)[e.index])
    if isinstance(e, Neg):
        val = -eval_expression(e.operand, env)
    elif isinstance(e, BinOp):
        a = eval_expression(e.left, env)
        c = eval_expression(e.right, env)
        try:
            val = _SCALAR_BIN[e.op](a, c)
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise EvalError(f"{type(exc).__name__}: {exc}", to_source(e)) from None
    elif isinstance(e, Call):
        args = [eval_expression(a, env) for a in e.args]
        try:
            val = _SCALAR_FUN[e.func](*args)
        except (ValueError, OverflowError) as exc:
            raise EvalError(f"{e.func}: {exc}", to_source(e)) from None
    else:
        raise TypeError(f"not an expression node: {e!r}")
    if not math.isfinite(val):
        raise EvalError("non-finite result", to_source(e))
    return val


# -- vectorized evaluation --------------------------------------------------

_ARRAY_BIN = {"+": np.add, "-": np.subtract, "*": np.multiply,
              "/": np.divide, "^": np.power}
_ARRAY_FUN = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "log": np.log,
              "abs": np.abs, "sqrt": np.sqrt, "min": np.minimum, "max": np.maximum}


def eval_array(e: Expr, env: Mapping) -> np.ndarray:
    """Evaluate over broadcastable numpy arrays.

    Scalar variables map to arrays; state variables map to arrays whose last
    axis holds the components. The result has the broadcast shape of the
    variables actually referenced (a bare literal gives a 0-d array).
    """
    with np.errstate(all="ignore"):
        return _eval_array(e, env)


def _check_finite(val: np.ndarray, e: Expr) -> np.ndarray:
    if not np.all(np.isfinite(val)):
        bad = int(np.flatnonzero(~np.isfinite(val))[0]) if val.ndim else 0
        raise EvalError("non-finite result", to_source(e), bad)
    return val


def _eval_array(e: Expr, env: Mapping) -> np.ndarray:
    if isinstance(e, Num):
        return np.asarray(e.value)
    if isinstance(e, Var):
        return np.asarray(_lookup(env, e.name), dtype=float)
    if isinstance(e, Index):
        return np.asarray(_lookup(env, e.name), dtype=float)[..., e.index]
    if isinstance(e, Neg):
        return np.negative(_eval_array(e.operand, env))
    if isinstance(e, BinOp):
        a = _eval_array(e.left, env)
        c = _eval_array(e.right, env)
        return _check_finite(_ARRAY_BIN[e.op](a, c), e)
    if isinstance(e, Call):
        args = [_eval_array(a, env) for a in e.args]
        return _check_finite(_ARRAY_FUN[e.func](*args), e)
    raise TypeError(f"not an expression node: {e!r}")
