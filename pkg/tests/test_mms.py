import numpy as np
import pytest

import oracles
from noncoercive import InsufficientLevels, ManufacturedUnsupported, ProblemSpec, preset
from noncoercive.config import spec_from_expressions
from noncoercive.mms import convergence_study, loglog_slope, manufactured_rhs, manufactured_spec, residual_study


def _spec(**kw):
    base = dict(a="1", b="0", f="0", alpha=1.0, beta=1.0, B=0.0)
    base.update(kw)
    return spec_from_expressions(**base)


def test_zero_solution_gives_zero_datum():
    spec = preset("paper-core-mms").spec
    f = manufactured_rhs("0", spec)
    x, y = np.meshgrid(np.linspace(0, 1, 5), np.linspace(0, 1, 5))
    assert not f(x, y).any()


def test_quadratic_laplacian():
    f = manufactured_rhs("x*(1-x)*y*(1-y)", _spec())
    rng = np.random.default_rng(0)
    x, y = rng.uniform(size=(2, 50))
    expected = 2 * y * (1 - y) + 2 * x * (1 - x) + x * (1 - x) * y * (1 - y)
    np.testing.assert_allclose(f(x, y), expected, rtol=1e-13, atol=1e-15)


def test_paper_core_rhs_against_finite_differences():
    spec = preset("paper-core-mms").spec
    f = manufactured_rhs("sin(pi*x)*sin(pi*y)", spec)
    rng = np.random.default_rng(1)
    x, y = rng.uniform(0.05, 0.95, size=(2, 1000))
    ref = np.array([oracles.fd4_operator(spec, oracles.sin_sin, xi, yi) for xi, yi in zip(x, y)])
    assert np.max(np.abs(f(x, y) - ref)) <= 1e-6


def test_manufactured_spec_carries_exact_solution():
    base = preset("paper-core-mms").spec
    spec = manufactured_spec("x*(1-x)*y*(1-y)", base)
    assert "u_exact" in spec.sources
    assert spec.sources["f"].source != base.sources["f"].source


@pytest.mark.parametrize("kw, u", [(dict(b="abs(x-0.5)", B=1.0), "x*y"), ({}, "abs(x-0.5)*y"),
                                   (dict(phi=["max(t, 0)**2", "0"], phi_growth_C=1.0), "x*y")])
def test_nonsmooth_data_rejected(kw, u):
    with pytest.raises(ManufacturedUnsupported):
        manufactured_rhs(u, _spec(**kw))


def test_spec_without_expressions_rejected():
    spec = ProblemSpec(a_field=1.0, b_field=0.0, f_data=1.0, alpha=1.0, beta=1.0, B_bound=0.0)
    with pytest.raises(ManufacturedUnsupported):
        manufactured_rhs("x*y", spec)


def test_too_few_levels():
    spec = preset("linear-sanity-mms").spec
    with pytest.raises(InsufficientLevels):
        convergence_study(spec, "sin(pi*x)*sin(pi*y)", [(7, 7), (15, 15)])
    with pytest.raises(InsufficientLevels):
        residual_study(spec, [(7, 7)])


def test_loglog_slope():
    h = np.array([0.1, 0.05, 0.025])
    assert loglog_slope(h, 3 * h**2) == pytest.approx(2.0, abs=1e-12)


def test_convergence_study_rows():
    sc = preset("linear-sanity-mms")
    rows = convergence_study(sc.spec, sc.spec.sources["u_exact"], [(7, 7), (15, 15), (31, 31)], sc.solver)
    assert rows[0]["order"] is None
    assert [r["nx"] for r in rows] == [7, 15, 31]
    assert all(r["error_l2"] > 0 for r in rows)
    assert rows[-1]["order"] == pytest.approx(2.0, abs=0.3)


def test_residual_study_floor_and_exactness():
    sc = preset("linear-sanity-mms")
    out = residual_study(sc.spec, [(15, 15), (31, 31), (63, 63)], sc.solver)
    assert len(out["h"]) == len(out["floor"]) == 3
    assert all(len(v) == 3 for v in out["residuals"].values())
    # the quadratic lies in the kernel of the central truncation error
    assert out["orders"]["x(1-x)y(1-y)"] is None
    assert all(v <= fl for v, fl in zip(out["residuals"]["x(1-x)y(1-y)"], out["floor"]))
    assert out["orders"]["sin(pi x)sin(pi y)"] == pytest.approx(2.0, abs=0.1)
