"""Discrete norms, a-priori estimate checks and weak-formulation residuals.

Quadrature conventions:

* volume integrals: weight ``hx*hy`` per interior node;
* gradient integrals: one term per grid edge (boundary edges included), with the
  difference quotient along the edge and weight ``hx*hy``, i.e. the pairing
  ``sum_e mu_e (du_e)(dv_e) hx hy`` that the assembled operator satisfies by
  summation by parts;
* the flux ``Phi(u)`` on an edge is the average of its end-node values.

Every inequality is reported with an explicit slack
``c_q * h * (1 + ||f||_2 + ||f||_2**2)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Grid, GridFunction, ProblemSpec, coefficient, truncate
from .discretization import FrozenState, assemble, edge_coefficients
from .errors import DimensionMismatch, GrowthAssumptionViolated, InvalidArgument, InvalidTestFunction

NORM_KINDS = ("L1", "L2", "Linf", "W11_seminorm")
DEFAULT_CQ = 10.0
DEFAULT_K_LIST = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0)


def norms(v: GridFunction, kind):
    """``L1``, ``L2``, ``Linf`` norms or the ``W11_seminorm`` ``int |grad v|``."""
    vals = v.values
    dA = v.grid.cell_area
    if kind == "L1":
        return float(np.sum(np.abs(vals)) * dA)
    if kind == "L2":
        return float(np.sqrt(np.sum(vals * vals) * dA))
    if kind == "Linf":
        return float(np.max(np.abs(vals)))
    if kind == "W11_seminorm":
        ve = v.extended()
        gx = (ve[1:, :-1] - ve[:-1, :-1]) / v.grid.hx
        gy = (ve[:-1, 1:] - ve[:-1, :-1]) / v.grid.hy
        return float(np.sum(np.hypot(gx, gy)) * dA)
    raise InvalidArgument(f"unknown norm {kind!r}; expected one of {NORM_KINDS}")


def levelset_measure(v: GridFunction, k):
    """``hx*hy * #{nodes : |v| >= k}``."""
    if not k >= 0:
        raise InvalidArgument(f"level must be >= 0, got {k}")
    return float(np.count_nonzero(np.abs(v.values) >= k) * v.grid.cell_area)


def edge_differences(v_ext, grid: Grid):
    """Difference quotients on x-edges ``(nx+1, ny)`` and y-edges ``(nx, ny+1)``."""
    dx = (v_ext[1:, 1:-1] - v_ext[:-1, 1:-1]) / grid.hx
    dy = (v_ext[1:-1, 1:] - v_ext[1:-1, :-1]) / grid.hy
    return dx, dy


def slack_budget(f: GridFunction, c_q=DEFAULT_CQ):
    fl2 = norms(f, "L2")
    return c_q * f.grid.h * (1.0 + fl2 + fl2 * fl2)


@dataclass
class EstimateRow:
    inequality: str
    k: float
    lhs: float
    rhs: float
    slack: float

    @property
    def margin(self):
        return self.rhs - self.lhs

    @property
    def passed(self):
        return bool(self.lhs <= self.rhs + self.slack)

    def as_dict(self):
        d = asdict(self)
        d["margin"] = self.margin
        d["passed"] = self.passed
        return d


@dataclass
class EstimateReport:
    rows: list
    slack: float
    c_q: float
    instance: str = ""

    @property
    def passed(self):
        return all(r.passed for r in self.rows)

    def row(self, inequality, k=None):
        for r in self.rows:
            if r.inequality == inequality and (k is None or r.k == k):
                return r
        raise KeyError((inequality, k))

    def failures(self):
        return [r for r in self.rows if not r.passed]

    def as_dict(self):
        return {
            "instance": self.instance,
            "slack": self.slack,
            "c_q": self.c_q,
            "passed": self.passed,
            "rows": [r.as_dict() for r in self.rows],
        }


def _check(u, f, spec=None):
    u.check_conformable(f)
    if spec is not None and (u.grid.lx, u.grid.ly) != (spec.lx, spec.ly):
        raise DimensionMismatch("grid domain does not match the problem domain")


def gradient_energy_weighted(u: GridFunction, alpha, B, theta):
    """``alpha * sum_e |du_e|^2 / (1 + B max(|u_L|, |u_R|))**theta * hx*hy``."""
    ue = u.extended()
    dx, dy = edge_differences(ue, u.grid)
    ax = np.maximum(np.abs(ue[1:, 1:-1]), np.abs(ue[:-1, 1:-1]))
    ay = np.maximum(np.abs(ue[1:-1, 1:]), np.abs(ue[1:-1, :-1]))
    wx = coefficient(alpha, B, ax, theta)
    wy = coefficient(alpha, B, ay, theta)
    return float((np.sum(wx * dx * dx) + np.sum(wy * dy * dy)) * u.grid.cell_area)


def gradient_energy(v: GridFunction):
    """``sum_e |dv_e|^2 hx*hy``, the discrete ``||grad v||_2^2``."""
    dx, dy = edge_differences(v.extended(), v.grid)
    return float((np.sum(dx * dx) + np.sum(dy * dy)) * v.grid.cell_area)


def verify_apriori(u: GridFunction, f: GridFunction, spec: ProblemSpec, k_list=DEFAULT_K_LIST,
                   c_q=DEFAULT_CQ, instance=""):
    """Both sides of the four a-priori bounds for each truncation level.

    * ``aa``: ``int_{|u|>=k} u^2  <=  int_{|u|>=k} f^2``
    * ``qq``: ``meas{|u|>=k}  <=  int_{|u|>=k} f^2 / k^2`` (``<= |Omega|`` at ``k = 0``)
    * ``bb``: ``alpha int |grad u|^2/(1+B|u|)^theta  <=  int f^2``
    * ``troncate``: ``||grad T_k u||^2  <=  ||f||_1 / alpha * k (1+Bk)^theta``

    ``f`` is the untruncated datum.  The ``qq`` slack is the ``aa`` slack over ``k^2``.
    """
    _check(u, f, spec)
    grid = u.grid
    dA = grid.cell_area
    slack = slack_budget(f, c_q)
    uv, fv = u.values, f.values
    f_l1 = norms(f, "L1")
    rows = []
    lhs_bb = gradient_energy_weighted(u, spec.alpha, spec.B_bound, spec.theta)
    rhs_bb = float(np.sum(fv * fv) * dA)
    for k in k_list:
        k = float(k)
        if k < 0:
            raise InvalidArgument(f"truncation levels must be >= 0, got {k}")
        mask = np.abs(uv) >= k
        lhs_aa = float(np.sum(uv[mask] ** 2) * dA)
        rhs_aa = float(np.sum(fv[mask] ** 2) * dA)
        rows.append(EstimateRow("aa", k, lhs_aa, rhs_aa, slack))
        meas = levelset_measure(u, k)
        if k > 0:
            rows.append(EstimateRow("qq", k, meas, rhs_aa / k**2, slack / k**2))
        else:
            rows.append(EstimateRow("qq", k, meas, spec.area, 0.0))
        rows.append(EstimateRow("bb", k, lhs_bb, rhs_bb, slack))
        lhs_tr = gradient_energy(truncate(u, k))
        rhs_tr = f_l1 / spec.alpha * k * (1.0 + spec.B_bound * k) ** spec.theta
        rows.append(EstimateRow("troncate", k, lhs_tr, rhs_tr, slack))
    return EstimateReport(rows=rows, slack=slack, c_q=c_q, instance=instance)


def uniform_levelset(solutions, f: GridFunction, k_list=DEFAULT_K_LIST):
    """Level-set measures uniformly over a family of solutions ``u_n``.

    Returns one dict per ``k > 0`` with ``max_measure = max_n meas{|u_n| >= k}`` and
    ``bound = max_n int_{|u_n|>=k} f^2 / k^2``, plus ``monotone``: whether
    ``max_measure`` is nonincreasing in ``k``.
    """
    out = []
    for k in sorted(float(k) for k in k_list if k > 0):
        meas = [levelset_measure(u, k) for u in solutions]
        bounds = [float(np.sum(f.values[np.abs(u.values) >= k] ** 2) * f.grid.cell_area) / k**2 for u in solutions]
        out.append({"k": k, "max_measure": max(meas), "bound": max(bounds),
                    "passed": all(m <= b for m, b in zip(meas, bounds))})
    monotone = all(a["max_measure"] >= b["max_measure"] for a, b in zip(out, out[1:]))
    return {"levels": out, "monotone": monotone, "passed": monotone and all(r["passed"] for r in out)}


@dataclass
class TestFunction:
    """An admissible test function: nodal values plus optional analytic data.

    ``func(x, y)`` and ``grad(x, y) -> (gx, gy)`` are used when present; without
    ``grad`` the residuals fall back to edge difference quotients.
    """

    __test__ = False

    name: str
    values: GridFunction
    func: Optional[Callable] = None
    grad: Optional[Callable] = None

    @classmethod
    def from_callable(cls, name, grid, func, grad=None):
        return cls(name, GridFunction.from_function(grid, func), func, grad)

    def check_admissible(self):
        grid = self.values.grid
        scale = max(1.0, self.values.sup())
        if self.func is not None:
            X, Y = grid.nodes_ext()
            ring = np.ones(X.shape, bool)
            ring[1:-1, 1:-1] = False
            vals = np.broadcast_to(self.func(X, Y), X.shape)
            if not np.all(np.isfinite(vals)):
                raise InvalidTestFunction(f"test function {self.name!r} is not finite")
            if np.max(np.abs(vals[ring])) > 1e-12 * scale:
                raise InvalidTestFunction(f"test function {self.name!r} does not vanish on the boundary")
        if self.grad is not None:
            for Xm, Ym in (grid.xedge_midpoints(), grid.yedge_midpoints()):
                gx, gy = self.grad(Xm, Ym)
                if not (np.all(np.isfinite(gx)) and np.all(np.isfinite(gy))):
                    raise InvalidTestFunction(f"test function {self.name!r} has a non-finite gradient")


def _as_test_function(phi, grid, name="phi"):
    if isinstance(phi, TestFunction):
        if phi.values.grid != grid:
            raise DimensionMismatch("test function lives on a different grid")
        return phi
    if isinstance(phi, GridFunction):
        if phi.grid != grid:
            raise DimensionMismatch("test function lives on a different grid")
        return TestFunction(name, phi)
    raise InvalidTestFunction(f"unsupported test function type {type(phi).__name__}")


def _bump1d(s, s0, r):
    z = (s - s0) / r
    inside = np.abs(z) < 1.0
    q = np.where(inside, 1.0 - z * z, 0.0)
    val = q**3
    dval = np.where(inside, -6.0 * z * q * q / r, 0.0)
    return val, dval


def _tensor_bump(x0, y0, rx, ry):
    def func(x, y):
        return _bump1d(x, x0, rx)[0] * _bump1d(y, y0, ry)[0]

    def grad(x, y):
        bx, dbx = _bump1d(x, x0, rx)
        by, dby = _bump1d(y, y0, ry)
        return dbx * by, bx * dby

    return func, grad


BUMP_OFFSETS = ((0.4, 0.4), (0.6, 0.4), (0.4, 0.6), (0.6, 0.6))
BUMP_RADIUS = 0.4


def analytic_library(grid: Grid):
    """Smooth test functions with exact gradients, scaled to the domain."""
    lx, ly = grid.lx, grid.ly
    px, py = np.pi / lx, np.pi / ly
    lib = [
        TestFunction.from_callable(
            "x(1-x)y(1-y)",
            grid,
            lambda x, y: (x / lx) * (1 - x / lx) * (y / ly) * (1 - y / ly),
            lambda x, y: (
                (1 - 2 * x / lx) / lx * (y / ly) * (1 - y / ly),
                (x / lx) * (1 - x / lx) * (1 - 2 * y / ly) / ly,
            ),
        ),
        TestFunction.from_callable(
            "sin(pi x)sin(pi y)",
            grid,
            lambda x, y: np.sin(px * x) * np.sin(py * y),
            lambda x, y: (px * np.cos(px * x) * np.sin(py * y), py * np.sin(px * x) * np.cos(py * y)),
        ),
    ]
    for ox, oy in BUMP_OFFSETS:
        func, grad = _tensor_bump(ox * lx, oy * ly, BUMP_RADIUS * lx, BUMP_RADIUS * ly)
        lib.append(TestFunction.from_callable(f"bump({ox},{oy})", grid, func, grad))
    return lib


def test_function_library(grid: Grid, u: Optional[GridFunction] = None, k_list=DEFAULT_K_LIST):
    """The analytic family plus ``T_m(u)`` for every ``m > 0`` in ``k_list``."""
    lib = analytic_library(grid)
    if u is not None:
        for m in k_list:
            if m > 0:
                lib.append(TestFunction(f"T_{m:g}(u)", truncate(u, m)))
    return lib


def _flux_edge_averages(spec, u_ext):
    px, _ = spec.flux(u_ext[:, 1:-1])
    _, py = spec.flux(u_ext[1:-1, :])
    return 0.5 * (px[:-1] + px[1:]), 0.5 * (py[:, :-1] + py[:, 1:])


def _weak_form_terms(u, f, spec, test_dx, test_dy, test_vals):
    """``(diffusion, zero_order, source, flux)`` integrals against one test function."""
    grid = u.grid
    dA = grid.cell_area
    ue = u.extended()
    mu_x, mu_y = edge_coefficients(spec, grid, ue)
    dux, duy = edge_differences(ue, grid)
    diffusion = float((np.sum(mu_x * dux * test_dx) + np.sum(mu_y * duy * test_dy)) * dA)
    zero_order = float(np.sum(u.values * test_vals) * dA)
    source = float(np.sum(f.values * test_vals) * dA)
    if spec.has_flux:
        fx, fy = _flux_edge_averages(spec, ue)
        flux = float((np.sum(fx * test_dx) + np.sum(fy * test_dy)) * dA)
    else:
        flux = 0.0
    return diffusion, zero_order, source, flux


def distributional_residual(u: GridFunction, f: GridFunction, spec: ProblemSpec, phi, signed=False):
    """Residual of the weak form tested against ``phi``.

    ``int mu grad u . grad phi + int u phi - int f phi - int Phi(u) . grad phi``;
    returns its absolute value unless ``signed``.  Requires a declared growth
    constant whenever the flux is nonzero.
    """
    _check(u, f, spec)
    if spec.has_flux and spec.phi_growth_C is None:
        raise GrowthAssumptionViolated(
            "distributional residuals need the quadratic growth bound; declare phi_growth_C "
            "or use the entropy residual"
        )
    grid = u.grid
    tf = _as_test_function(phi, grid)
    tf.check_admissible()
    if tf.grad is not None:
        gx, _ = tf.grad(*grid.xedge_midpoints())
        _, gy = tf.grad(*grid.yedge_midpoints())
        gx = np.broadcast_to(gx, (grid.nx + 1, grid.ny))
        gy = np.broadcast_to(gy, (grid.nx, grid.ny + 1))
    else:
        gx, gy = edge_differences(tf.values.extended(), grid)
    diffusion, zero_order, source, flux = _weak_form_terms(u, f, spec, gx, gy, tf.values.values)
    r = diffusion + zero_order - source - flux
    return r if signed else abs(r)


def entropy_residual(u: GridFunction, f: GridFunction, spec: ProblemSpec, phi, k):
    """Entropy margin ``LHS - RHS`` tested with ``T_k(u - phi)``.

    ``LHS = int mu grad u . grad T + int u T`` and ``RHS = int f T + int Phi(u) . grad T``;
    the inequality holds discretely when the margin is at most the slack.
    No growth condition on the flux is needed.
    """
    _check(u, f, spec)
    if not k >= 0:
        raise InvalidArgument(f"truncation level must be >= 0, got {k}")
    grid = u.grid
    tf = _as_test_function(phi, grid)
    tf.check_admissible()
    T = truncate(u - tf.values, k)
    tx, ty = edge_differences(T.extended(), grid)
    diffusion, zero_order, source, flux = _weak_form_terms(u, f, spec, tx, ty, T.values)
    return (diffusion + zero_order) - (source + flux)


def energy_balance(u: GridFunction, f: GridFunction, spec: ProblemSpec, k, scheme="upwind"):
    """``hx*hy * T_k(u) . (L_u u - f)`` through the assembled matrix.

    With zero flux this equals ``entropy_residual(u, f, spec, 0, k)`` by summation
    by parts; it is an independent evaluation path for that identity.
    """
    _check(u, f, spec)
    system = assemble(spec, u.grid, FrozenState(u, np.inf), f, scheme)
    T = truncate(u, k)
    return float(T.flat @ system.residual(u) * u.grid.cell_area)


@dataclass
class ResidualRow:
    test_function: str
    kind: str  # "distributional" or "entropy"
    k: Optional[float]
    value: float
    slack: float

    @property
    def passed(self):
        if self.kind == "distributional":
            return bool(abs(self.value) <= self.slack)
        return bool(self.value <= self.slack)

    def as_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return d


@dataclass
class ResidualReport:
    rows: list = field(default_factory=list)
    slack: float = 0.0
    instance: str = ""

    @property
    def passed(self):
        return all(r.passed for r in self.rows)

    def failures(self):
        return [r for r in self.rows if not r.passed]

    def as_dict(self):
        return {"instance": self.instance, "slack": self.slack, "passed": self.passed,
                "rows": [r.as_dict() for r in self.rows]}


def residual_report(u: GridFunction, f: GridFunction, spec: ProblemSpec, k_list=DEFAULT_K_LIST,
                    mode="entropy", c_q=DEFAULT_CQ, instance=""):
    """Residuals over the test-function library.

    ``mode="distributional"`` adds the weak-form residuals to the entropy
    margins; ``mode="entropy"`` computes the margins only.  The test function
    ``u`` itself is always included in the entropy family.
    """
    if mode not in ("distributional", "entropy"):
        raise InvalidArgument(f"unknown residual mode {mode!r}")
    slack = slack_budget(f, c_q)
    lib = test_function_library(u.grid, u, k_list)
    report = ResidualReport(slack=slack, instance=instance)
    if mode == "distributional":
        for tf in lib:
            report.rows.append(ResidualRow(tf.name, "distributional", None,
                                           distributional_residual(u, f, spec, tf, signed=True), slack))
    for tf in lib + [TestFunction("u", u)]:
        for k in k_list:
            report.rows.append(ResidualRow(tf.name, "entropy", float(k),
                                           entropy_residual(u, f, spec, tf, k), slack))
    return report


test_function_library.__test__ = False
