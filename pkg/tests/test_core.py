import numpy as np
import pytest
from hypothesis import given, strategies as st

from noncoercive import (
    AssumptionViolation,
    DimensionMismatch,
    Grid,
    GridFunction,
    GrowthAssumptionViolated,
    InvalidArgument,
    ProblemSpec,
    coefficient,
    phi_eval,
    psi,
    truncate,
)
from noncoercive.config import spec_from_expressions

reals = st.floats(-1e6, 1e6, allow_nan=False)
levels = st.floats(0, 1e3, allow_nan=False)


@pytest.mark.parametrize("s, k, expected", [(3, 2, 2), (-5, 2, -2), (1, 2, 1), (0.0, 0, 0.0)])
def test_truncate_examples(s, k, expected):
    assert truncate(s, k) == expected


def test_truncate_negative_level():
    with pytest.raises(InvalidArgument):
        truncate(1.0, -0.1)


def test_truncate_grid_function():
    g = Grid(2, 2)
    v = GridFunction(g, [[3.0, -5.0], [1.0, 0.5]])
    np.testing.assert_array_equal(truncate(v, 2).values, [[2.0, -2.0], [1.0, 0.5]])


@given(reals, reals, levels)
def test_truncate_lipschitz_and_bound(s, t, k):
    assert abs(truncate(s, k) - truncate(t, k)) <= abs(s - t)
    assert abs(truncate(s, k)) <= min(abs(s), k)


@given(reals, levels, levels)
def test_truncate_nesting(s, k, extra):
    assert truncate(truncate(s, k + extra), k) == truncate(s, k)


@pytest.mark.parametrize("i, k", [(1.0, 0.0), (4.0, 1.5), (0.5, 2.0)])
def test_psi_examples(i, k):
    assert psi(k, i, k) == 0.0
    assert psi(k + 1 / i + 7, i, k) == 1.0
    assert psi(-(k + 1 / i) - 7, i, k) == -1.0
    assert psi(k + 0.5 / i, i, k) == pytest.approx(0.5)


def test_psi_invalid_i():
    with pytest.raises(InvalidArgument):
        psi(1.0, 0.0, 1.0)


@given(reals, st.floats(1e-3, 1e3), levels)
def test_psi_properties(s, i, k):
    v = psi(s, i, k)
    assert psi(-s, i, k) == -v
    assert abs(v) <= 1.0
    assert v * s >= 0.0
    assert psi(s + 1.0, i, k) >= v


@pytest.mark.parametrize("a, b, u, theta, expected", [(1, 1, 1, 2, 0.25), (1, 0, 100, 2, 1.0), (2, 1, -3, 1, 0.5)])
def test_coefficient_examples(a, b, u, theta, expected):
    assert coefficient(a, b, u, theta) == expected


@given(st.floats(0.1, 10), st.floats(0, 5), st.floats(-50, 50), st.floats(0, 4))
def test_coefficient_bounds(a, b, u, theta):
    c = coefficient(a, b, u, theta)
    assert a / (1 + b * abs(u)) ** theta == c
    assert 0 < c <= a


def test_phi_eval_examples():
    spec = spec_from_expressions(f="1", phi=["t**2", "0"], phi_growth_C=1.0)
    np.testing.assert_array_equal(phi_eval(3.0, spec), [9.0, 0.0])
    np.testing.assert_array_equal(phi_eval(0.0, spec), [0.0, 0.0])


def test_phi_growth_violation_at_construction():
    with pytest.raises(GrowthAssumptionViolated):
        spec_from_expressions(f="1", phi=["exp(t)", "0"], phi_growth_C=1.0)


def test_phi_growth_violation_at_evaluation():
    # the sampled range is [-10, 10] for |f| <= 1; the bound first fails near t = 13
    spec = spec_from_expressions(f="1", phi=["exp(t)-1-t", "0"], phi_growth_C=1000.0)
    phi_eval(10.0, spec)
    with pytest.raises(GrowthAssumptionViolated):
        phi_eval(20.0, spec)


def test_grid_geometry():
    g = Grid(3, 4, lx=2.0, ly=1.0)
    assert g.hx == 0.5 and g.hy == 0.2
    assert g.shape == (3, 4) and g.size == 12
    X, Y = g.nodes()
    assert X[0, 0] == 0.5 and Y[0, 0] == 0.2
    assert g.xedge_midpoints()[0].shape == (4, 4)
    assert g.yedge_midpoints()[0].shape == (3, 5)


def test_grid_function_conformability():
    a = GridFunction.zeros(Grid(3, 3))
    with pytest.raises(DimensionMismatch):
        a + GridFunction.zeros(Grid(3, 4))
    with pytest.raises(InvalidArgument):
        GridFunction(Grid(2, 2), [[np.nan, 0], [0, 0]])


def test_grid_function_is_read_only():
    v = GridFunction.zeros(Grid(2, 2))
    with pytest.raises(ValueError):
        v.values[0, 0] = 1.0


@pytest.mark.parametrize(
    "kwargs, fragment",
    [
        (dict(a="0.5"), "alpha <= a(x) <= beta"),
        (dict(b="-1"), "0 <= b(x) <= B"),
        (dict(b="2"), "0 <= b(x) <= B"),
    ],
)
def test_assumption_violations(kwargs, fragment):
    base = dict(a="1", b="0", f="1", alpha=1.0, beta=1.0, B=1.0)
    base.update(kwargs)
    with pytest.raises(AssumptionViolation, match=r"\(ab\)") as err:
        spec_from_expressions(**base)
    assert fragment in str(err.value)


def test_problem_spec_constants_and_defaults():
    spec = ProblemSpec(a_field=1.0, b_field=0.0, f_data=2.0, alpha=1.0, beta=1.0, B_bound=0.0)
    assert spec.theta == 2.0 and not spec.has_flux
    g = Grid(3, 3)
    np.testing.assert_array_equal(spec.datum(g).values, np.full((3, 3), 2.0))
    px, py = spec.flux(np.array([1.0, 2.0]))
    assert not px.any() and not py.any()
