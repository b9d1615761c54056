"""Expression trees for objectives and constraints.

Nodes are immutable and hashable.  Exponents are rational numbers kept in
lowest terms, so fractional powers stay exact under differentiation and
the derivative of any tree is again a tree.  Two encodings are supported:

* a canonical JSON encoding used in problem files and reports, e.g.
  ``{"op":"pow","base":{"var":0},"exp":"1/2"}``;
* a small infix grammar for command-line overrides, e.g. ``x1*x2`` or
  ``x2^(5/2) + 0.5*x1^2 - x1*x2`` (variables are 1-based there).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .errors import DomainError, ParseError


class Expr:
    """Base node.  Operators build trees without simplification."""

    def __add__(self, other):
        return Add(self, as_expr(other))

    def __radd__(self, other):
        return Add(as_expr(other), self)

    def __sub__(self, other):
        return Sub(self, as_expr(other))

    def __rsub__(self, other):
        return Sub(as_expr(other), self)

    def __mul__(self, other):
        return Mul(self, as_expr(other))

    def __rmul__(self, other):
        return Mul(as_expr(other), self)

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __rtruediv__(self, other):
        return Div(as_expr(other), self)

    def __pow__(self, exponent):
        return Pow(self, Fraction(exponent))

    def __neg__(self):
        return Neg(self)


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class Var(Expr):
    index: int


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: Fraction


ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float, Fraction)):
        return Const(float(value))
    raise TypeError(f"cannot treat {value!r} as an expression")


def var(index: int) -> Var:
    return Var(index)


def const(value: float) -> Const:
    return Const(value)


# ---------------------------------------------------------------------------
# evaluation


def evaluate(e: Expr, x: Sequence[float]) -> float:
    """Evaluate at a point.  Raises DomainError outside the real domain."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        if e.index >= len(x):
            raise DomainError(f"variable x{e.index + 1} but point has {len(x)} coordinates")
        return float(x[e.index])
    if isinstance(e, Add):
        return evaluate(e.left, x) + evaluate(e.right, x)
    if isinstance(e, Sub):
        return evaluate(e.left, x) - evaluate(e.right, x)
    if isinstance(e, Mul):
        return evaluate(e.left, x) * evaluate(e.right, x)
    if isinstance(e, Div):
        denom = evaluate(e.right, x)
        if denom == 0.0:
            raise DomainError("division by zero")
        return evaluate(e.left, x) / denom
    if isinstance(e, Neg):
        return -evaluate(e.operand, x)
    if isinstance(e, Pow):
        base = evaluate(e.base, x)
        q = e.exponent
        if q == 0:
            return 1.0
        if base == 0.0 and q < 0:
            raise DomainError("zero raised to a negative power")
        if base < 0.0 and q.denominator != 1:
            raise DomainError(f"negative base {base!r} under fractional exponent {q}")
        if q.denominator == 1:
            return float(base ** int(q))
        return float(base ** float(q))
    raise TypeError(f"unknown node {e!r}")


def eval_many(e: Expr, points: np.ndarray) -> np.ndarray:
    """Vectorized evaluation over rows of ``points``.

    Out-of-domain entries come back as nan/inf instead of raising; callers
    mask non-finite values.
    """
    points = np.asarray(points, dtype=float)
    with np.errstate(all="ignore"):
        return _eval_many(e, points)


def _eval_many(e: Expr, points: np.ndarray) -> np.ndarray:
    if isinstance(e, Const):
        return np.full(points.shape[0], e.value)
    if isinstance(e, Var):
        if e.index >= points.shape[1]:
            raise DomainError(f"variable x{e.index + 1} but points have {points.shape[1]} coordinates")
        return points[:, e.index].copy()
    if isinstance(e, Add):
        return _eval_many(e.left, points) + _eval_many(e.right, points)
    if isinstance(e, Sub):
        return _eval_many(e.left, points) - _eval_many(e.right, points)
    if isinstance(e, Mul):
        return _eval_many(e.left, points) * _eval_many(e.right, points)
    if isinstance(e, Div):
        return _eval_many(e.left, points) / _eval_many(e.right, points)
    if isinstance(e, Neg):
        return -_eval_many(e.operand, points)
    if isinstance(e, Pow):
        base = _eval_many(e.base, points)
        q = e.exponent
        if q == 0:
            return np.ones_like(base)
        if q.denominator == 1 and q >= 0:
            return base ** int(q)
        if q.denominator == 1:
            return base ** float(int(q))
        out = base ** float(q)
        # numpy yields nan for negative bases under fractional powers,
        # which is exactly the mask callers expect
        return out
    raise TypeError(f"unknown node {e!r}")


def differentiable_at(e: Expr, x: Sequence[float]) -> bool:
    """True when every fractional power sits strictly inside its domain
    and no denominator vanishes at ``x``."""
    try:
        _check_smooth(e, x)
    except DomainError:
        return False
    return True


def _check_smooth(e: Expr, x) -> None:
    if isinstance(e, (Const, Var)):
        return
    if isinstance(e, (Add, Sub, Mul)):
        _check_smooth(e.left, x)
        _check_smooth(e.right, x)
        return
    if isinstance(e, Div):
        _check_smooth(e.left, x)
        _check_smooth(e.right, x)
        if evaluate(e.right, x) == 0.0:
            raise DomainError("division by zero")
        return
    if isinstance(e, Neg):
        _check_smooth(e.operand, x)
        return
    if isinstance(e, Pow):
        _check_smooth(e.base, x)
        q = e.exponent
        if q.denominator != 1 or q < 0:
            base = evaluate(e.base, x)
            if base <= 0.0 and q.denominator != 1:
                raise DomainError("fractional power at nonpositive base")
            if base == 0.0 and q < 0:
                raise DomainError("negative power at zero")
        return
    raise TypeError(f"unknown node {e!r}")


def domain_margin(e: Expr, x: Sequence[float]) -> float:
    """Smallest slack to a domain boundary at ``x``: the minimum over
    fractional-power bases of their value and over denominators of their
    magnitude.  inf when the tree has neither; -inf when evaluation
    already fails."""
    try:
        return _domain_margin(e, x)
    except DomainError:
        return -float("inf")


def _domain_margin(e: Expr, x) -> float:
    if isinstance(e, (Const, Var)):
        return float("inf")
    if isinstance(e, (Add, Sub, Mul)):
        return min(_domain_margin(e.left, x), _domain_margin(e.right, x))
    if isinstance(e, Div):
        inner = min(_domain_margin(e.left, x), _domain_margin(e.right, x))
        return min(inner, abs(evaluate(e.right, x)))
    if isinstance(e, Neg):
        return _domain_margin(e.operand, x)
    if isinstance(e, Pow):
        inner = _domain_margin(e.base, x)
        q = e.exponent
        if q.denominator != 1:
            return min(inner, evaluate(e.base, x))
        if q < 0:
            return min(inner, abs(evaluate(e.base, x)))
        return inner
    raise TypeError(f"unknown node {e!r}")


def arity(e: Expr) -> int:
    """1 + largest variable index appearing in the tree (0 if none)."""
    if isinstance(e, Const):
        return 0
    if isinstance(e, Var):
        return e.index + 1
    if isinstance(e, (Add, Sub, Mul, Div)):
        return max(arity(e.left), arity(e.right))
    if isinstance(e, Neg):
        return arity(e.operand)
    if isinstance(e, Pow):
        return arity(e.base)
    raise TypeError(f"unknown node {e!r}")


# ---------------------------------------------------------------------------
# differentiation

# Smart constructors fold constants so derivatives stay compact.  No other
# simplification happens anywhere.


def _add(a: Expr, b: Expr) -> Expr:
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Add(a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if b == ZERO:
        return a
    if a == ZERO:
        return _neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return Sub(a, b)


def _mul(a: Expr, b: Expr) -> Expr:
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if isinstance(a, Const) and isinstance(b, Mul) and isinstance(b.left, Const):
        return _mul(Const(a.value * b.left.value), b.right)
    if isinstance(b, Const):
        return _mul(b, a)
    return Mul(a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if a == ZERO:
        return ZERO
    if b == ONE:
        return a
    return Div(a, b)


def _neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def _pow(base: Expr, q: Fraction) -> Expr:
    if q == 0:
        return ONE
    if q == 1:
        return base
    if isinstance(base, Const) and (base.value > 0 or q.denominator == 1):
        return Const(float(base.value ** float(q)))
    return Pow(base, q)


@lru_cache(maxsize=None)
def differentiate(e: Expr, i: int) -> Expr:
    """Exact partial derivative with respect to variable ``i``."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == i else ZERO
    if isinstance(e, Add):
        return _add(differentiate(e.left, i), differentiate(e.right, i))
    if isinstance(e, Sub):
        return _sub(differentiate(e.left, i), differentiate(e.right, i))
    if isinstance(e, Mul):
        return _add(
            _mul(differentiate(e.left, i), e.right),
            _mul(e.left, differentiate(e.right, i)),
        )
    if isinstance(e, Div):
        # (a/b)' = a'/b - a b' / b^2
        return _sub(
            _div(differentiate(e.left, i), e.right),
            _div(_mul(e.left, differentiate(e.right, i)), _pow(e.right, Fraction(2))),
        )
    if isinstance(e, Neg):
        return _neg(differentiate(e.operand, i))
    if isinstance(e, Pow):
        q = e.exponent
        if q == 0:
            return ZERO
        inner = differentiate(e.base, i)
        return _mul(_mul(Const(float(q)), _pow(e.base, q - 1)), inner)
    raise TypeError(f"unknown node {e!r}")


def gradient(e: Expr, x: Sequence[float]) -> np.ndarray:
    """Evaluate the exact gradient at ``x``.  DomainError where a
    fractional power sits at the boundary of its domain."""
    n = len(x)
    return np.array([evaluate(differentiate(e, i), x) for i in range(n)])


def gradient_exprs(e: Expr, n: int) -> tuple[Expr, ...]:
    return tuple(differentiate(e, i) for i in range(n))


def hessian(e: Expr, x: Sequence[float]) -> np.ndarray:
    """Second partials at ``x``.  The upper triangle is computed and
    mirrored, so the emitted matrix is symmetric exactly."""
    n = len(x)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            out[i, j] = evaluate(differentiate(differentiate(e, i), j), x)
            out[j, i] = out[i, j]
    return out


# ---------------------------------------------------------------------------
# canonical JSON encoding

_BINARY = {"add": Add, "sub": Sub, "mul": Mul, "div": Div}
_NODE_FOR_OP = {Add: "add", Sub: "sub", Mul: "mul", Div: "div"}


def from_tree(obj, path: str = "") -> Expr:
    """Build an Expr from the canonical JSON tree (already decoded)."""
    if not isinstance(obj, dict):
        raise ParseError(f"expected an object, got {type(obj).__name__}", path or "/")
    if "const" in obj:
        value = obj["const"]
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ParseError("const must be a number", f"{path}/const")
        return Const(float(value))
    if "var" in obj:
        index = obj["var"]
        if not isinstance(index, int) or isinstance(index, bool) or index < 0:
            raise ParseError("var must be a nonnegative integer", f"{path}/var")
        return Var(index)
    op = obj.get("op")
    if op in _BINARY:
        args = obj.get("args")
        if not isinstance(args, list) or len(args) != 2:
            raise ParseError(f"{op} takes exactly 2 args", f"{path}/args")
        return _BINARY[op](
            from_tree(args[0], f"{path}/args/0"),
            from_tree(args[1], f"{path}/args/1"),
        )
    if op == "neg":
        args = obj.get("args")
        if not isinstance(args, list) or len(args) != 1:
            raise ParseError("neg takes exactly 1 arg", f"{path}/args")
        return Neg(from_tree(args[0], f"{path}/args/0"))
    if op == "pow":
        if "base" not in obj or "exp" not in obj:
            raise ParseError("pow needs base and exp", path or "/")
        return Pow(
            from_tree(obj["base"], f"{path}/base"),
            _parse_exponent(obj["exp"], f"{path}/exp"),
        )
    raise ParseError(f"unknown node {sorted(obj.keys())}", path or "/")


def _parse_exponent(raw, path: str) -> Fraction:
    try:
        if isinstance(raw, bool):
            raise ValueError("bool")
        if isinstance(raw, (int, float)):
            return Fraction(raw).limit_denominator(10**9)
        if isinstance(raw, str):
            return Fraction(raw.strip())
        raise ValueError(type(raw).__name__)
    except ZeroDivisionError:
        raise ParseError(f"exponent {raw!r} has zero denominator", path) from None
    except (ValueError, TypeError):
        raise ParseError(f"malformed exponent {raw!r}", path) from None


def to_tree(e: Expr):
    """Inverse of from_tree; dict keys follow the canonical order."""
    if isinstance(e, Const):
        v = e.value
        return {"const": int(v) if float(v).is_integer() else v}
    if isinstance(e, Var):
        return {"var": e.index}
    if isinstance(e, (Add, Sub, Mul, Div)):
        return {"op": _NODE_FOR_OP[type(e)], "args": [to_tree(e.left), to_tree(e.right)]}
    if isinstance(e, Neg):
        return {"op": "neg", "args": [to_tree(e.operand)]}
    if isinstance(e, Pow):
        q = e.exponent
        exp = int(q) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"
        return {"op": "pow", "base": to_tree(e.base), "exp": exp}
    raise TypeError(f"unknown node {e!r}")


def serialize(e: Expr) -> str:
    """Canonical compact JSON text for ``e``."""
    return json.dumps(to_tree(e), separators=(",", ":"))


def parse(text: str) -> Expr:
    """Parse canonical JSON (text starting with '{') or the infix grammar."""
    stripped = text.strip()
    if not stripped:
        raise ParseError("empty expression")
    if stripped.startswith("{"):
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", f"offset {exc.pos}") from None
        return from_tree(obj)
    return _parse_infix(stripped)


# ---------------------------------------------------------------------------
# infix grammar (CLI convenience): + - * / ^ ( ), sqrt(), x1..xN, numbers

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+)|([A-Za-z_]\w*)|([()+\-*/^,]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise ParseError(f"unexpected character {text[pos]!r}", f"column {pos + 1}")
            break
        if m.group(1) is not None:
            tokens.append(("num", m.group(1), m.start(1)))
        elif m.group(2) is not None:
            tokens.append(("name", m.group(2), m.start(2)))
        else:
            tokens.append(("op", m.group(3), m.start(3)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _InfixParser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value: str):
        kind, text, at = self.take()
        if text != value:
            raise ParseError(f"expected {value!r}, got {text or 'end of input'!r}", f"column {at + 1}")

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, at = self.peek()
        if kind != "end":
            raise ParseError(f"trailing input {text!r}", f"column {at + 1}")
        return e

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self) -> Expr:
        if self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> Fraction:
        sign = 1
        closing = False
        if self.peek()[1] == "(":
            self.take()
            closing = True
        if self.peek()[1] == "-":
            self.take()
            sign = -1
        kind, text, at = self.take()
        if kind != "num":
            raise ParseError("exponent must be a rational literal", f"column {at + 1}")
        num = text
        if self.peek()[1] == "/":
            self.take()
            kind, dtext, dat = self.take()
            if kind != "num" or "." in dtext or "." in num:
                raise ParseError("rational exponent must be integer/integer", f"column {dat + 1}")
            if int(dtext) == 0:
                raise ParseError("exponent has zero denominator", f"column {dat + 1}")
            q = Fraction(int(num), int(dtext))
        else:
            q = Fraction(num).limit_denominator(10**9)
        if closing:
            self.expect(")")
        return sign * q

    def atom(self) -> Expr:
        kind, text, at = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if text == "sqrt":
                self.expect("(")
                inner = self.expr()
                self.expect(")")
                return Pow(inner, Fraction(1, 2))
            m = re.fullmatch(r"x([1-9]\d*)", text)
            if not m:
                raise ParseError(f"unknown name {text!r} (variables are x1, x2, ...)", f"column {at + 1}")
            return Var(int(m.group(1)) - 1)
        if text == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        raise ParseError(f"unexpected {text or 'end of input'!r}", f"column {at + 1}")


def _parse_infix(text: str) -> Expr:
    return _InfixParser(text).parse()
