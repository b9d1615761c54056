import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from util import fd_gradient_oracle, random_positive_expr
from whopt.errors import DomainError, ParseError
from whopt.expr import (
    Add,
    Const,
    Div,
    Mul,
    Neg,
    Pow,
    Sub,
    Var,
    arity,
    differentiate,
    differentiable_at,
    domain_margin,
    eval_many,
    evaluate,
    from_tree,
    gradient,
    hessian,
    parse,
    serialize,
    to_tree,
)


class TestEvaluate:
    def test_product_plus_root(self):
        f = parse("x1*x2 + x1^(1/2)")
        assert evaluate(f, [4.0, 3.0]) == 14.0

    def test_mixed_power_objective(self):
        f = parse("x2^(5/2) + 1/2*x1^2 - x1*x2")
        assert evaluate(f, [16.0, 16.0]) == 16.0**2.5 + 128.0 - 256.0

    def test_rational_exponents(self):
        assert evaluate(parse("x1^(3/2)"), [4.0]) == 8.0
        assert evaluate(parse("x1^(-1/2)"), [4.0]) == 0.5

    def test_division(self):
        assert evaluate(parse("x1 / x2"), [1.0, 4.0]) == 0.25

    def test_negative_base_fractional_power_rejected(self):
        with pytest.raises(DomainError):
            evaluate(parse("x1^(1/2)"), [-1.0])

    def test_zero_to_negative_power_rejected(self):
        with pytest.raises(DomainError):
            evaluate(parse("x1^(-1/2)"), [0.0])

    def test_division_by_zero_rejected(self):
        with pytest.raises(DomainError):
            evaluate(parse("x1 / x2"), [1.0, 0.0])

    def test_eval_many_matches_pointwise(self):
        f = parse("x1^2*x2 + x2^(1/2) - x1/(x2+1)")
        pts = np.array([[1.0, 4.0], [0.5, 2.0], [3.0, 9.0]])
        batch = eval_many(f, pts)
        for row, got in zip(pts, batch):
            assert got == pytest.approx(evaluate(f, row), rel=1e-15)

    def test_eval_many_marks_domain_failures_nonfinite(self):
        f = parse("x1^(1/2)")
        vals = eval_many(f, np.array([[4.0], [-4.0]]))
        assert vals[0] == 2.0
        assert not np.isfinite(vals[1])


class TestDifferentiation:
    def test_gradient_at_reference_point(self):
        f = parse("x2^(5/2) + 1/2*x1^2 - x1*x2")
        assert list(gradient(f, [16.0, 16.0])) == [0.0, 144.0]
        assert list(gradient(f, [17.0, 16.0])) == [1.0, 143.0]

    def test_hessian_at_reference_point(self):
        f = parse("x2^(5/2) + 1/2*x1^2 - x1*x2")
        H = hessian(f, [16.0, 16.0])
        assert H.tolist() == [[1.0, -1.0], [-1.0, 15.0]]

    def test_hessian_exactly_symmetric(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            f = random_positive_expr(rng, 2)
            x = rng.uniform(0.5, 2.0, size=2)
            H = hessian(f, x)
            assert np.array_equal(H, H.T)

    def test_square_root_derivative(self):
        d = differentiate(parse("x1^(1/2)"), 0)
        assert evaluate(d, [4.0]) == 0.25

    def test_gradient_matches_independent_finite_differences(self):
        rng = np.random.default_rng(11)
        checked = 0
        while checked < 60:
            f = random_positive_expr(rng, 2)
            x = rng.uniform(0.5, 2.0, size=2)
            try:
                g = gradient(f, x)
                ref = fd_gradient_oracle(f, x)
            except DomainError:
                continue
            if not (np.all(np.isfinite(g)) and np.all(np.isfinite(ref))):
                continue
            if np.max(np.abs(g)) > 1e6:
                continue
            assert np.max(np.abs(g - ref) / (1.0 + np.abs(ref))) <= 1e-5
            checked += 1

    def test_differentiable_at_respects_domain_boundary(self):
        f = parse("x1^(1/2)")
        assert differentiable_at(f, [1.0])
        assert not differentiable_at(f, [0.0])

    def test_domain_margin(self):
        f = parse("x1^(1/2) + x2^2")
        assert domain_margin(f, [1.0, 5.0]) == 1.0
        assert domain_margin(parse("x1^2 + x2^2"), [-9.0, 1.0]) == math.inf


class TestSerialization:
    def test_tree_round_trip_identity(self):
        f = parse("x2^(5/2) + 1/2*x1^2 - x1*x2")
        assert from_tree(to_tree(f), "/") == f

    def test_serialized_bytes_stable(self):
        f = parse("x1*x2 + x1^(1/2)")
        text = serialize(f)
        assert serialize(parse(text)) == text

    def test_integer_constants_emitted_as_ints(self):
        tree = to_tree(parse("2*x1"))
        assert tree["args"][0] == {"const": 2}

    def test_integer_exponent_emitted_as_int(self):
        assert to_tree(parse("x1^3"))["exp"] == 3

    def test_fractional_exponent_emitted_as_string(self):
        assert to_tree(parse("x1^(5/2)"))["exp"] == "5/2"

    def test_parse_json_route(self):
        f = parse(json.dumps(to_tree(parse("x1 + 2"))))
        assert evaluate(f, [3.0]) == 5.0

    def test_zero_denominator_exponent_rejected(self):
        with pytest.raises(ParseError):
            from_tree({"op": "pow", "base": {"var": 0}, "exp": "1/0"}, "/")

    def test_binary_node_arity_enforced(self):
        with pytest.raises(ParseError) as err:
            from_tree({"op": "add", "args": [{"var": 0}]}, "/objective")
        assert "/objective" in str(err.value)

    def test_unknown_node_rejected_with_path(self):
        with pytest.raises(ParseError) as err:
            from_tree({"op": "add", "args": [{"var": 0}, {"wat": 1}]},
                      "/objective")
        assert "/objective/args/1" in str(err.value)


class TestInfix:
    def test_variables_are_one_based(self):
        assert parse("x1") == Var(0)
        assert parse("x3") == Var(2)

    def test_sqrt_function(self):
        assert evaluate(parse("sqrt(x1 + x2)"), [9.0, 7.0]) == 4.0

    def test_precedence(self):
        assert evaluate(parse("2 + 3 * 4 ^ 2"), []) == 50.0

    def test_unary_minus(self):
        assert evaluate(parse("-x1 + 5"), [2.0]) == 3.0

    def test_error_reports_column(self):
        with pytest.raises(ParseError) as err:
            parse("x1 + * x2")
        assert "column 6" in str(err.value)

    def test_unbalanced_parens_rejected(self):
        with pytest.raises(ParseError):
            parse("(x1 + x2")


class TestArity:
    def test_arity_counts_highest_variable(self):
        assert arity(parse("x1 + x3")) == 3
        assert arity(Const(4.0)) == 0


@st.composite
def expr_trees(draw, depth=3):
    if depth == 0:
        if draw(st.booleans()):
            return Var(draw(st.integers(0, 2)))
        return Const(draw(st.integers(-5, 5)))
    kind = draw(st.sampled_from(["add", "sub", "mul", "div", "neg", "pow",
                                 "leaf"]))
    if kind == "leaf":
        return draw(expr_trees(depth=0))
    if kind == "neg":
        return Neg(draw(expr_trees(depth=depth - 1)))
    if kind == "pow":
        base = draw(expr_trees(depth=depth - 1))
        exp = Fraction(draw(st.integers(1, 4)), draw(st.integers(1, 3)))
        return Pow(base, exp)
    left = draw(expr_trees(depth=depth - 1))
    right = draw(expr_trees(depth=depth - 1))
    return {"add": Add, "sub": Sub, "mul": Mul,
            "div": Div}[kind](left, right)


@settings(max_examples=150, deadline=None)
@given(expr_trees())
def test_any_tree_survives_serialization(e):
    assert from_tree(to_tree(e), "/") == e
    assert parse(serialize(e)) == e
