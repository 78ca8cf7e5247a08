"""Text form of the function zoo.

Grammar (whitespace insensitive)::

    expr  := NAME | NAME '(' arg (',' arg)* ')'
    arg   := expr | NUMBER

Constructors: ``gauss(a)``, ``gauss2(a11,a12,a22)``, ``ind_box(lo,hi)``,
``ind_box2(lo1,hi1,lo2,hi2)``, ``ind_ball(p,r)``, ``expnorm(p,c)``, ``one``,
``translate(e, a...)``, ``reflect(e)``, ``linmap(e, a11,a12,a21,a22)`` (or
``linmap(e, a)`` in 1D), ``scale(e, a)``, ``hscale(e, lambda)``,
``prod(e1, e2, ...)``, ``sum(e1, e2, ...)``, ``pow(e, a)``.  Norm exponents
accept ``inf``.
"""
from __future__ import annotations

import math
import re

from .function_space import (
    ExpNorm,
    FunctionExpr,
    Gaussian,
    HadwigerScale,
    IndicatorBall,
    IndicatorBox,
    Linear,
    One,
    Power,
    Product,
    Reflect,
    ScaleValue,
    Sum,
    Translate,
)


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} at position {pos}: {text!r}")


class ExprDomainError(ValueError):
    pass


_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[+-]?inf\b)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[(),]))"
)


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExprSyntaxError("unexpected character", text, pos)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        value = m.group(kind)
        out.append((kind, value, start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None, value=None):
        tok = self.toks[self.i]
        if kind and tok[0] != kind or value and tok[1] != value:
            want = value or kind
            raise ExprSyntaxError(f"expected {want!r}, found {tok[1] or 'end'!r}", self.text, tok[2])
        self.i += 1
        return tok

    def parse(self) -> FunctionExpr:
        e = self.arg()
        if not isinstance(e, FunctionExpr):
            raise ExprSyntaxError("expected an expression, found a number", self.text, 0)
        self.take("end")
        return e

    def arg(self):
        kind, value, pos = self.peek()
        if kind == "num":
            self.i += 1
            return float(value)
        if kind != "name":
            raise ExprSyntaxError(f"unexpected {value or 'end'!r}", self.text, pos)
        self.i += 1
        args = []
        if self.peek()[1] == "(":
            self.take("op", "(")
            args.append(self.arg())
            while self.peek()[1] == ",":
                self.take("op", ",")
                args.append(self.arg())
            self.take("op", ")")
        try:
            return _build(value, args)
        except ExprDomainError:
            raise
        except (ValueError, TypeError) as exc:
            raise ExprDomainError(f"{value}: {exc}") from exc


def _nums(name, args, n=None, at_least=None):
    if any(isinstance(a, FunctionExpr) for a in args):
        raise ExprDomainError(f"{name}: expected numeric arguments")
    if n is not None and len(args) != n:
        raise ExprDomainError(f"{name}: expected {n} numbers, got {len(args)}")
    if at_least is not None and len(args) < at_least:
        raise ExprDomainError(f"{name}: expected at least {at_least} numbers")
    return [float(a) for a in args]


def _expr_then_nums(name, args, counts):
    if not args or not isinstance(args[0], FunctionExpr):
        raise ExprDomainError(f"{name}: first argument must be an expression")
    nums = _nums(name, args[1:])
    if len(nums) not in counts:
        raise ExprDomainError(f"{name}: expected {' or '.join(map(str, counts))} numbers")
    return args[0], nums


def _build(name, args) -> FunctionExpr:
    if name == "one":
        if args:
            raise ExprDomainError("one takes no arguments")
        return One()
    if name == "gauss":
        (a,) = _nums(name, args, 1)
        return Gaussian(((a,),))
    if name == "gauss2":
        a11, a12, a22 = _nums(name, args, 3)
        return Gaussian(((a11, a12), (a12, a22)))
    if name == "ind_box":
        lo, hi = _nums(name, args, 2)
        return IndicatorBox((lo,), (hi,))
    if name == "ind_box2":
        lo1, hi1, lo2, hi2 = _nums(name, args, 4)
        return IndicatorBox((lo1, lo2), (hi1, hi2))
    if name == "ind_ball":
        p, r = _nums(name, args, 2)
        return IndicatorBall(p, r)
    if name == "expnorm":
        p, c = _nums(name, args, 2)
        return ExpNorm(p, c)
    if name == "translate":
        e, a = _expr_then_nums(name, args, (1, 2))
        return Translate(e, tuple(a))
    if name == "reflect":
        if len(args) != 1 or not isinstance(args[0], FunctionExpr):
            raise ExprDomainError("reflect takes one expression")
        return Reflect(args[0])
    if name == "linmap":
        e, a = _expr_then_nums(name, args, (1, 4))
        A = ((a[0],),) if len(a) == 1 else ((a[0], a[1]), (a[2], a[3]))
        return Linear(e, A)
    if name == "scale":
        e, (a,) = _expr_then_nums(name, args, (1,))
        return ScaleValue(e, a)
    if name == "hscale":
        e, (lam,) = _expr_then_nums(name, args, (1,))
        if not (0 < lam <= 1):
            raise ExprDomainError(f"hscale: lambda must lie in (0, 1], got {lam}")
        return HadwigerScale(e, lam)
    if name == "pow":
        e, (a,) = _expr_then_nums(name, args, (1,))
        return Power(e, a)
    if name in ("prod", "sum"):
        if not args or not all(isinstance(a, FunctionExpr) for a in args):
            raise ExprDomainError(f"{name}: arguments must be expressions")
        return Product(tuple(args)) if name == "prod" else Sum(tuple(args))
    raise ExprDomainError(f"unknown constructor {name!r}")


def parse_expr(text: str) -> FunctionExpr:
    """Parse the text form of a zoo expression."""
    return _Parser(text).parse()


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def to_text(e: FunctionExpr) -> str:
    """Canonical text form; ``parse_expr(to_text(e)) == e``."""
    if isinstance(e, One):
        return "one"
    if isinstance(e, Gaussian):
        A = e.A
        if len(A) == 1:
            return f"gauss({_fmt(A[0][0])})"
        return f"gauss2({_fmt(A[0][0])},{_fmt(A[0][1])},{_fmt(A[1][1])})"
    if isinstance(e, IndicatorBox):
        if e.dim == 1:
            return f"ind_box({_fmt(e.lo[0])},{_fmt(e.hi[0])})"
        return f"ind_box2({_fmt(e.lo[0])},{_fmt(e.hi[0])},{_fmt(e.lo[1])},{_fmt(e.hi[1])})"
    if isinstance(e, IndicatorBall):
        return f"ind_ball({_fmt(e.p)},{_fmt(e.r)})"
    if isinstance(e, ExpNorm):
        return f"expnorm({_fmt(e.p)},{_fmt(e.c)})"
    if isinstance(e, Translate):
        return f"translate({to_text(e.child)},{','.join(map(_fmt, e.a))})"
    if isinstance(e, Reflect):
        return f"reflect({to_text(e.child)})"
    if isinstance(e, Linear):
        flat = [v for row in e.A for v in row]
        return f"linmap({to_text(e.child)},{','.join(map(_fmt, flat))})"
    if isinstance(e, ScaleValue):
        return f"scale({to_text(e.child)},{_fmt(e.a)})"
    if isinstance(e, HadwigerScale):
        return f"hscale({to_text(e.child)},{_fmt(e.lam)})"
    if isinstance(e, Power):
        return f"pow({to_text(e.child)},{_fmt(e.exponent)})"
    if isinstance(e, Product):
        return f"prod({','.join(to_text(c) for c in e.children)})"
    if isinstance(e, Sum):
        return f"sum({','.join(to_text(c) for c in e.children)})"
    return f"<{type(e).__name__}>"
