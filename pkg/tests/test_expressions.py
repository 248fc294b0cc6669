import numpy as np
import pytest
import sympy

from noncoercive import ConfigParseError, Expression, ManufacturedUnsupported
from noncoercive.expressions import field, flux_component


@pytest.mark.parametrize(
    "src, expected",
    [
        ("1+2*3", 7.0),
        ("2**3**2", 512.0),
        ("2^3", 8.0),
        ("2^3^2", 512.0),
        ("x^2*3", 12.0),
        ("-x^2", -4.0),
        ("-x**2", -4.0),
        ("min(3, x, 5)", 2.0),
        ("max(-1, x)", 2.0),
        ("abs(-x)", 2.0),
        ("exp(0)+cos(0)+sin(0)", 2.0),
        ("pi", np.pi),
        ("e", np.e),
    ],
)
def test_evaluation(src, expected):
    assert Expression(src)(x=2.0) == expected


def test_broadcast_and_shape():
    out = field("x*y")(x=np.array([[1.0], [2.0]]), y=np.array([3.0, 4.0]))
    np.testing.assert_array_equal(out, [[3.0, 4.0], [6.0, 8.0]])
    assert field("1")(x=np.zeros((2, 3)), y=0.0).shape == (2, 3)


def test_numeric_source_is_accepted():
    assert Expression(2)() == 2.0


@pytest.mark.parametrize(
    "src",
    ["x.real", "x[0]", "x < 1", "foo(x)", "z", "sin(x, y)", "min(x)", "1j", "lambda: 1", "sin(x=1)", "x +"],
)
def test_rejected(src):
    with pytest.raises(ConfigParseError):
        Expression(src)


def test_variable_scoping():
    with pytest.raises(ConfigParseError):
        field("t")
    with pytest.raises(ConfigParseError):
        flux_component("x")


def test_to_sympy_and_differentiability():
    ex = field("x^2*sin(pi*y)")
    X, Y = sympy.symbols("x y", real=True)
    assert sympy.simplify(ex.to_sympy({"x": X, "y": Y}) - X**2 * sympy.sin(sympy.pi * Y)) == 0
    assert ex.differentiable
    assert not field("abs(x)").differentiable
    with pytest.raises(ManufacturedUnsupported):
        field("max(x, y)").require_differentiable("u")


def test_float_literal_round_trip():
    assert Expression("0.1+0.2")() == 0.1 + 0.2
