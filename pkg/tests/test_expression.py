import math

import numpy as np
import pytest

from errors import ExpressionSyntaxError, UnknownIdentifierError, EvaluationDomainError
from fields.expression import parse, evaluate, to_text


@pytest.mark.parametrize("text, x, y, expected", [
    ("1 + 2*3", 0.0, 0.0, 7.0),
    ("2^3^2", 0.0, 0.0, 512.0),
    ("-2^2", 0.0, 0.0, -4.0),
    ("(1 + 2)*3", 0.0, 0.0, 9.0),
    ("10 - 4 - 3", 0.0, 0.0, 3.0),
    ("8 / 4 / 2", 0.0, 0.0, 1.0),
    ("x^2 + y^2", 3.0, 4.0, 25.0),
    ("min(x, y, 2)", 3.0, 4.0, 2.0),
    ("max(x, y)", 3.0, 4.0, 4.0),
    ("abs(-x)", 3.0, 0.0, 3.0),
    ("exp(0) + cos(0) + sin(0)", 0.0, 0.0, 2.0),
    ("tanh(0)", 0.0, 0.0, 0.0),
    ("sqrt(x)", 9.0, 0.0, 3.0),
    ("pi", 0.0, 0.0, math.pi),
    ("e", 0.0, 0.0, math.e),
    ("1.5e1", 0.0, 0.0, 15.0),
    ("(-8)^2", 0.0, 0.0, 64.0),
])
def test_evaluate_precedence_and_functions(text, x, y, expected):
    assert evaluate(parse(text), x, y) == pytest.approx(expected, rel=1e-14)


def test_variables_reported():
    assert parse("x + 1").variables == frozenset({'x'})
    assert parse("sin(x*y)").variables == frozenset({'x', 'y'})
    assert parse("pi").variables == frozenset()


def test_printed_form_reparses_to_same_tree():
    expr = parse("1 - 0.1*(x^2 + y^2) / -tanh(2*(5 - sqrt(x^2+y^2)))")
    assert parse(to_text(expr.root)).root == expr.root


def test_vectorized_evaluation():
    expr = parse("x + 2*y")
    values = expr.evaluate(np.array([0.0, 1.0, 2.0]), np.array([1.0, 1.0, 1.0]))
    np.testing.assert_allclose(values, [2.0, 3.0, 4.0])


@pytest.mark.parametrize("text, offset", [
    ("1 +", 3),
    ("(1 + 2", 6),
    ("2 * * 3", 4),
    ("", 0),
    ("1 2", 2),
    ("sin 1", 4),
])
def test_syntax_errors_carry_offsets(text, offset):
    with pytest.raises(ExpressionSyntaxError) as excinfo:
        parse(text)
    assert excinfo.value.offset == offset
    assert excinfo.value.kind == 'parse'


def test_offsets_are_utf8_bytes():
    # the no-break space is two bytes in UTF-8
    with pytest.raises(ExpressionSyntaxError) as excinfo:
        parse("x\u00a0+ \u00e9")
    assert excinfo.value.offset == 5


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError) as excinfo:
        parse("1 + z")
    assert excinfo.value.name == 'z'
    assert excinfo.value.offset == 4
    assert excinfo.value.to_dict()['kind'] == 'parse'


def test_function_arity_checked():
    with pytest.raises(ExpressionSyntaxError):
        parse("sin(x, y)")
    with pytest.raises(ExpressionSyntaxError):
        parse("max(x)")


@pytest.mark.parametrize("text, x", [
    ("sqrt(x)", -1.0),
    ("1 / x", 0.0),
    ("x^(-1)", 0.0),
    ("x^0.5", -2.0),
    ("exp(x)", 1000.0),
])
def test_domain_errors(text, x):
    with pytest.raises(EvaluationDomainError) as excinfo:
        evaluate(parse(text), x, 0.0)
    assert excinfo.value.kind == 'domain'
    assert excinfo.value.subexpression
