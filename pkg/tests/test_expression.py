import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asa.exceptions import (
    ExpressionSyntaxError,
    NumericException,
    UnknownIdentifierError,
)
from asa.expression import evaluate_constant, parse_expression


@pytest.mark.parametrize(
    ("text", "expected"),
    [
        ("1+2*3", 7.0),
        ("(1+2)*3", 9.0),
        ("1-2-3", -4.0),
        ("8/4/2", 1.0),
        ("2^3^2", 512.0),
        ("-2^2", -4.0),
        ("--2", 2.0),
        ("+3", 3.0),
        ("2*-3", -6.0),
        ("1.5e1", 15.0),
        (".5", 0.5),
        ("pi", math.pi),
        ("cos(pi)", -1.0),
        ("exp(0)+ln(1)", 1.0),
        ("abs(-2)", 2.0),
    ],
)
def test_constant_arithmetic(text, expected):
    assert evaluate_constant(text) == pytest.approx(expected, rel=1e-15)


def test_variables():
    expr = parse_expression("lambda*u*(1-u^2) + theta - p")
    assert expr(0.25, 2.0, 0.5, 3.0) == pytest.approx(3 * 2 * (1 - 4) + 0.25 - 0.5)
    assert expr.variables == frozenset({"lambda", "u", "theta", "p"})
    assert expr.depends_on("p")
    assert not expr.is_constant


def test_unary_minus_binds_looser_than_power():
    expr = parse_expression("-u^2")
    assert expr(0.0, 3.0, 0.0, 0.0) == -9.0


def test_negative_base_integer_power():
    expr = parse_expression("u^3")
    assert expr(0.0, -2.0, 0.0, 0.0) == -8.0


def test_array_evaluation():
    expr = parse_expression("sin(theta)*u")
    theta = np.linspace(0.0, math.pi, 5)
    u = np.arange(5.0)
    np.testing.assert_allclose(expr(theta, u, 0.0, 0.0), np.sin(theta) * u)


def test_text_and_equality():
    first = parse_expression("u*(1-u^2)")
    second = parse_expression("u * ( 1 - u ^ 2 )")
    assert first.text == "u*(1-u^2)"
    assert first == second
    assert hash(first) == hash(second)
    assert first != parse_expression("u*(1+u^2)")

    with pytest.raises(NotImplementedError):
        # noinspection PyStatementEffect
        first == "u*(1-u^2)"  # noqa: B015


@pytest.mark.parametrize(
    ("text", "offset"),
    [
        ("u +* 2", 3),
        ("(u+1", 4),
        ("u $ 2", 2),
        ("", 0),
        ("u u", 2),
        ("sin(u", 5),
        ("2*", 2),
        # non-breaking space is two bytes in UTF-8
        ("\u00a0u*(1-", 7),
        ("\u00a0u $ 2", 4),
    ],
)
def test_syntax_errors(text, offset):
    with pytest.raises(ExpressionSyntaxError) as excinfo:
        parse_expression(text)
    assert excinfo.value.offset == offset


@pytest.mark.parametrize(
    ("text", "name", "offset"),
    [
        ("lambda*q", "q", 7),
        ("foo(u)", "foo", 0),
        ("u + sqrt(u)", "sqrt", 4),
        ("x", "x", 0),
    ],
)
def test_unknown_identifiers(text, name, offset):
    with pytest.raises(UnknownIdentifierError) as excinfo:
        parse_expression(text)
    assert excinfo.value.name == name
    assert excinfo.value.offset == offset


def test_evaluate_constant_rejects_variables():
    with pytest.raises(ExpressionSyntaxError):
        evaluate_constant("u/2")


def test_division_by_zero():
    expr = parse_expression("1/u")
    with pytest.raises(NumericException):
        expr(0.0, 0.0, 0.0, 0.0)


def test_symbolic_derivatives():
    expr = parse_expression("lambda*u*(1-u^2)")
    du = expr.derivative("u")
    assert du is not None
    assert du(0.0, 0.5, 0.0, 3.0) == pytest.approx(3.0 * (1 - 3 * 0.25))
    assert expr.derivative("p")(0.0, 0.5, 0.0, 3.0) == 0.0
    assert expr.derivative("theta").is_constant


def test_derivative_of_power_with_variable_exponent():
    expr = parse_expression("u^theta")
    du = expr.derivative("theta")
    assert du(2.0, 3.0, 0.0, 0.0) == pytest.approx(9.0 * math.log(3.0))


def test_no_symbolic_derivative_of_abs():
    expr = parse_expression("abs(u)*p")
    assert expr.derivative("u") is None
    # abs doesn't depend on p, so the p-derivative is still symbolic
    assert expr.derivative("p")(0.0, -2.0, 1.0, 0.0) == 2.0


def test_derivative_of_unknown_variable():
    with pytest.raises(UnknownIdentifierError):
        parse_expression("u").derivative("q")


# --- randomized ---------------------------------------------------------------

_LEAVES = st.one_of(
    st.sampled_from(["u", "p", "theta"]).map(lambda name: (name, lambda env, n=name: env[n])),
    st.integers(min_value=0, max_value=3).map(lambda c: (str(c), lambda env, c=c: float(c))),
)


def _binary(op: str):
    fns = {
        "+": lambda x, y: x + y,
        "-": lambda x, y: x - y,
        "*": lambda x, y: x * y,
    }

    def combine(pair):
        (left_text, left_fn), (right_text, right_fn) = pair
        fn = fns[op]
        return (
            f"({left_text}){op}({right_text})",
            lambda env: fn(left_fn(env), right_fn(env)),
        )

    return combine


def _call(name: str):
    fns = {"sin": math.sin, "cos": math.cos}

    def combine(child):
        text, child_fn = child
        return f"{name}({text})", lambda env: fns[name](child_fn(env))

    return combine


def _extend(children):
    pairs = st.tuples(children, children)
    return st.one_of(
        pairs.map(_binary("+")),
        pairs.map(_binary("-")),
        pairs.map(_binary("*")),
        children.map(_call("sin")),
        children.map(_call("cos")),
        children.map(lambda c: (f"-({c[0]})", lambda env, fn=c[1]: -fn(env))),
    )


expressions = st.recursive(_LEAVES, _extend, max_leaves=6)
points = st.fixed_dictionaries(
    {
        "u": st.floats(min_value=-1.0, max_value=1.0),
        "p": st.floats(min_value=-1.0, max_value=1.0),
        "theta": st.floats(min_value=0.1, max_value=3.0),
    }
)


@given(expressions, points)
@settings(max_examples=200, deadline=None)
def test_evaluation_matches_python(expression, env):
    text, reference = expression
    expr = parse_expression(text)
    assert expr(env["theta"], env["u"], env["p"], 0.0) == pytest.approx(
        reference(env), rel=1e-12, abs=1e-12
    )


@given(expressions, points, st.sampled_from(["u", "p", "theta"]))
@settings(max_examples=200, deadline=None)
def test_symbolic_derivative_matches_finite_differences(expression, env, var):
    text, reference = expression
    derivative = parse_expression(text).derivative(var)
    assert derivative is not None

    h = 1e-6
    plus = dict(env, **{var: env[var] + h})
    minus = dict(env, **{var: env[var] - h})
    expected = (reference(plus) - reference(minus)) / (2 * h)
    assert derivative(env["theta"], env["u"], env["p"], 0.0) == pytest.approx(
        expected, rel=1e-5, abs=1e-5
    )
