"""Serialisable time-varying coefficient expressions.

Model coefficients (decay rates, connection weights, inputs, delays) are
time-varying functions.  This module gives them a tiny closed expression
language so that they can be

* evaluated fast, on scalars and on numpy arrays alike,
* written to / read from configuration files losslessly, and
* bounded: sampled suprema/infima of the absolute value over a window,
  with explicit user overrides taking precedence.

Grammar (prefix notation, whitespace separated, parentheses group):

    expr := 't'                          the time variable
          | 'const' NUM                  a constant
          | 'sin' arg | 'cos' arg        trigonometric functions
          | 'abs' arg | 'exp' arg        absolute value / exponential
          | 'neg' arg                    negation
          | 'scale' NUM arg              NUM * arg
          | 'affine' NUM NUM arg         NUM1 * arg + NUM2
          | 'add' '(' expr ',' expr ')'  sum
          | 'mul' '(' expr ',' expr ')'  product
    arg  := atom | '(' expr ')'

Example::

    add(const 0.895, scale 0.005 (sin (affine 2.6458 0 t)))

which encodes ``0.895 + 0.005 * sin(2.6458 * t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "CoeffExpr",
    "Const",
    "TimeVar",
    "Sin",
    "Cos",
    "Abs",
    "Exp",
    "Neg",
    "Scale",
    "Affine",
    "Add",
    "Mul",
    "ExprParseError",
    "parse_expr",
    "to_text",
    "BoundPair",
    "bound_sup_inf",
]

Number = Union[float, np.ndarray]


class ExprParseError(ValueError):
    """Raised when expression text does not conform to the grammar."""


# ---------------------------------------------------------------------------
# nodes
# ---------------------------------------------------------------------------


class CoeffExpr:
    """Base class: a real-valued function of time.

    Instances are callable; ``expr(t)`` accepts floats or numpy arrays and
    returns the same shape.
    """

    def __call__(self, t: Number) -> Number:
        raise NotImplementedError

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"{type(self).__name__}<{to_text(self)}>"


@dataclass(frozen=True)
class Const(CoeffExpr):
    value: float

    def __call__(self, t: Number) -> Number:
        if isinstance(t, np.ndarray):
            return np.full(t.shape, self.value)
        return self.value


@dataclass(frozen=True)
class TimeVar(CoeffExpr):
    def __call__(self, t: Number) -> Number:
        return t


def _unary(name: str, scalar_fn, array_fn):
    @dataclass(frozen=True)
    class Node(CoeffExpr):
        arg: CoeffExpr

        def __call__(self, t: Number) -> Number:
            v = self.arg(t)
            if isinstance(v, np.ndarray):
                return array_fn(v)
            return scalar_fn(v)

    Node.__name__ = Node.__qualname__ = name
    return Node


Sin = _unary("Sin", math.sin, np.sin)
Cos = _unary("Cos", math.cos, np.cos)
Abs = _unary("Abs", abs, np.abs)
Exp = _unary("Exp", math.exp, np.exp)
Neg = _unary("Neg", lambda v: -v, np.negative)


@dataclass(frozen=True)
class Scale(CoeffExpr):
    factor: float
    arg: CoeffExpr

    def __call__(self, t: Number) -> Number:
        return self.factor * self.arg(t)


@dataclass(frozen=True)
class Affine(CoeffExpr):
    """``slope * arg(t) + offset`` -- the workhorse for frequency/phase."""

    slope: float
    offset: float
    arg: CoeffExpr

    def __call__(self, t: Number) -> Number:
        return self.slope * self.arg(t) + self.offset


@dataclass(frozen=True)
class Add(CoeffExpr):
    left: CoeffExpr
    right: CoeffExpr

    def __call__(self, t: Number) -> Number:
        return self.left(t) + self.right(t)


@dataclass(frozen=True)
class Mul(CoeffExpr):
    left: CoeffExpr
    right: CoeffExpr

    def __call__(self, t: Number) -> Number:
        return self.left(t) * self.right(t)


_UNARY = {"sin": Sin, "cos": Cos, "abs": Abs, "exp": Exp, "neg": Neg}
_BINARY = {"add": Add, "mul": Mul}


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _arg_text(e: CoeffExpr) -> str:
    """Render a sub-expression as an argument: atoms bare, others in parens."""
    if isinstance(e, (Const, TimeVar)):
        return to_text(e)
    return f"({to_text(e)})"


def to_text(e: CoeffExpr) -> str:
    """Serialise an expression to the grammar in the module docstring."""
    if isinstance(e, TimeVar):
        return "t"
    if isinstance(e, Const):
        return f"const {_num(e.value)}"
    if isinstance(e, Scale):
        return f"scale {_num(e.factor)} {_arg_text(e.arg)}"
    if isinstance(e, Affine):
        return f"affine {_num(e.slope)} {_num(e.offset)} {_arg_text(e.arg)}"
    if isinstance(e, Add):
        return f"add({to_text(e.left)}, {to_text(e.right)})"
    if isinstance(e, Mul):
        return f"mul({to_text(e.left)}, {to_text(e.right)})"
    for name, cls in _UNARY.items():
        if isinstance(e, cls):
            return f"{name} {_arg_text(e.arg)}"
    raise ExprParseError(f"cannot serialise {e!r}")


def _tokenize(text: str) -> list[str]:
    out: list[str] = []
    word = ""
    for ch in text:
        if ch in "(),":
            if word:
                out.append(word)
                word = ""
            out.append(ch)
        elif ch.isspace():
            if word:
                out.append(word)
                word = ""
        else:
            word += ch
    if word:
        out.append(word)
    return out


class _Tokens:
    def __init__(self, toks: list[str], text: str):
        self.toks = toks
        self.pos = 0
        self.text = text

    def peek(self) -> str | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ExprParseError(f"unexpected end of expression in {self.text!r}")
        self.pos += 1
        return tok

    def expect(self, what: str) -> None:
        tok = self.next()
        if tok != what:
            raise ExprParseError(
                f"expected {what!r} but found {tok!r} in {self.text!r}"
            )

    def number(self) -> float:
        tok = self.next()
        try:
            return float(tok)
        except ValueError:
            raise ExprParseError(f"expected a number, found {tok!r} in {self.text!r}")


def _parse(tokens: _Tokens) -> CoeffExpr:
    tok = tokens.next()
    if tok == "(":
        inner = _parse(tokens)
        tokens.expect(")")
        return inner
    if tok == "t":
        return TimeVar()
    if tok == "const":
        return Const(tokens.number())
    if tok == "scale":
        return Scale(tokens.number(), _parse(tokens))
    if tok == "affine":
        slope = tokens.number()
        offset = tokens.number()
        return Affine(slope, offset, _parse(tokens))
    if tok in _UNARY:
        return _UNARY[tok](_parse(tokens))
    if tok in _BINARY:
        cls = _BINARY[tok]
        tokens.expect("(")
        left = _parse(tokens)
        tokens.expect(",")
        right = _parse(tokens)
        tokens.expect(")")
        return cls(left, right)
    # Bare numeric literal: convenient shorthand for a constant.
    try:
        return Const(float(tok))
    except ValueError:
        raise ExprParseError(f"unknown token {tok!r} in {tokens.text!r}")


def parse_expr(text: str) -> CoeffExpr:
    """Parse expression text; inverse of :func:`to_text`."""
    tokens = _Tokens(_tokenize(text), text)
    expr = _parse(tokens)
    if tokens.peek() is not None:
        raise ExprParseError(
            f"trailing tokens {tokens.toks[tokens.pos:]} in {text!r}"
        )
    return expr


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundPair:
    """Envelope of a coefficient: sup and inf of |f| over a window.

    ``source`` records how the numbers were obtained: ``"sampled"`` for the
    default dense sampling, ``"override"`` for user-supplied values.
    """

    sup_abs: float
    inf_abs: float
    source: str = "sampled"


def bound_sup_inf(
    expr: CoeffExpr,
    t0: float = 0.0,
    t1: float = 1000.0,
    samples: int = 100_000,
) -> BoundPair:
    """Sampled sup/inf of ``|expr|`` over ``[t0, t1]``.

    Dense uniform sampling; adequate (about 1e-3) for smooth almost-periodic
    coefficients with moderate frequencies.  For exact envelopes, supply an
    override in the model's ``bound_overrides``.
    """
    ts = np.linspace(t0, t1, samples)
    vals = np.abs(np.asarray(expr(ts), dtype=float))
    return BoundPair(float(vals.max()), float(vals.min()), source="sampled")
