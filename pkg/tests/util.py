"""Shared builders for the test suite.

The finite-difference gradient here is written independently of the
package's own helper so gradient comparisons are a genuine dual-route
check, not the library agreeing with itself.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from whopt.analysis import ProblemSpec
from whopt.expr import Const, Expr, Var, _add, _div, _mul, _pow, _sub, evaluate
from whopt.geometry import Piece, PolyhedralCone, SetDescription


def fd_gradient_oracle(f: Expr, x, rel_step: float = 1e-6) -> np.ndarray:
    """Plain central differences, no shared code with the package."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(len(x))
    for i in range(len(x)):
        h = rel_step * (1.0 + abs(x[i]))
        hi = x.copy()
        lo = x.copy()
        hi[i] += h
        lo[i] -= h
        out[i] = (evaluate(f, hi) - evaluate(f, lo)) / (2 * h)
    return out


def random_positive_expr(rng: np.random.Generator, n: int,
                         depth: int = 4) -> Expr:
    """Random expression safe to evaluate and differentiate on points
    with coordinates in [0.5, 2]: denominators are shifted positive and
    fractional powers only see positive bases."""
    if depth == 0 or rng.uniform() < 0.25:
        if rng.uniform() < 0.5:
            return Var(int(rng.integers(n)))
        return Const(round(float(rng.uniform(0.2, 3.0)), 3))
    op = rng.choice(["add", "sub", "mul", "div", "pow"])
    a = random_positive_expr(rng, n, depth - 1)
    if op == "add":
        return _add(a, random_positive_expr(rng, n, depth - 1))
    if op == "sub":
        return _sub(a, random_positive_expr(rng, n, depth - 1))
    if op == "mul":
        return _mul(a, random_positive_expr(rng, n, depth - 1))
    if op == "div":
        denom = _add(_mul(Var(int(rng.integers(n))),
                          Var(int(rng.integers(n)))),
                     Const(round(float(rng.uniform(0.5, 2.0)), 3)))
        return _div(a, denom)
    base = _add(_mul(Var(int(rng.integers(n))), Var(int(rng.integers(n)))),
                Const(round(float(rng.uniform(0.2, 1.0)), 3)))
    exp = rng.choice([Fraction(2), Fraction(3), Fraction(1, 2),
                      Fraction(3, 2)])
    return _pow(base, Fraction(exp))


def orthant_cone(n: int = 2) -> PolyhedralCone:
    return PolyhedralCone.from_generators(np.eye(n).tolist())


def orthant_set(n: int = 2, lows=None, convex: bool = True,
                declared: bool = False) -> SetDescription:
    """The translated orthant {x : x >= lows} as a one-piece set."""
    lows = np.zeros(n) if lows is None else np.asarray(lows, dtype=float)
    piece = Piece(linear_A=-np.eye(n), linear_b=-lows, smooth=())
    return SetDescription(
        dim=n, ambient=orthant_cone(n), pieces=(piece,),
        declared_asymptotic=(orthant_cone(n),) if declared else None,
        convex=convex)


def make_problem(objective: Expr, alpha, feasible_set: SetDescription,
                 asymptotic: Expr | None = None, start=(1.0, 1.0),
                 label: str = "generated", seed: int = 0) -> ProblemSpec:
    return ProblemSpec(
        n=feasible_set.dim, alpha=Fraction(alpha), objective=objective,
        feasible_set=feasible_set, asymptotic=asymptotic,
        feasible_start=np.asarray(start, dtype=float), seed=seed,
        label=label)


def shifted_psd_quadratic(rng: np.random.Generator):
    """f(x) = q(x - m) with q a strictly positive definite quadratic
    form and m in [1, 5]^2, so the constrained minimum over the orthant
    sits at m with value 0.  Returns (f, h, m) where h is the pure
    quadratic part of f (coefficients of the expanded form)."""
    a = float(rng.uniform(0.5, 2.0))
    b = float(rng.uniform(0.5, 2.0))
    # keep the form strictly definite: c^2 < 4ab with room to spare
    c = float(rng.uniform(-0.9, 0.9)) * np.sqrt(2 * a * b)
    m = rng.uniform(1.0, 5.0, size=2)
    x1, x2 = Var(0), Var(1)
    d1 = _sub(x1, Const(float(m[0])))
    d2 = _sub(x2, Const(float(m[1])))
    f = _add(_add(_mul(Const(a), _mul(d1, d1)),
                  _mul(Const(b), _mul(d2, d2))),
             _mul(Const(c), _mul(d1, d2)))
    h = _add(_add(_mul(Const(a), _mul(x1, x1)),
                  _mul(Const(b), _mul(x2, x2))),
             _mul(Const(c), _mul(x1, x2)))
    return f, h, m
