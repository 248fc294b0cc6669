"""Manufactured solutions and grid-refinement studies."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import sympy

from .core import Grid, GridFunction, ProblemSpec
from .errors import InsufficientLevels, ManufacturedUnsupported
from .estimates import analytic_library, distributional_residual, norms
from .expressions import Expression, field as field_expr
from .solver import SolverConfig, picard_solve

_X, _Y, _T = (sympy.Symbol(n, real=True) for n in ("x", "y", "t"))


@dataclass(frozen=True)
class SymbolicField:
    """A field known in closed form: sympy expression plus a numpy evaluator."""

    expr: sympy.Expr

    @property
    def source(self):
        return sympy.sstr(self.expr)

    @cached_property
    def _fn(self):
        return sympy.lambdify((_X, _Y), self.expr, modules="numpy")

    def __call__(self, x, y):
        fn = self._fn
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(fn(x, y), np.broadcast(x, y).shape).astype(float)


def _sources(spec: ProblemSpec):
    try:
        return spec.sources["a"], spec.sources["b"], spec.sources["phi"]
    except KeyError:
        raise ManufacturedUnsupported(
            "manufactured data needs a problem built from expressions (coefficients and flux)"
        ) from None


def manufactured_rhs(u_exact, spec: ProblemSpec):
    """The datum ``f`` for which ``u_exact`` solves the continuous problem.

    ``f = -div(a grad u / (1 + b|u|)**theta) + u + div Phi(u)``, by symbolic
    differentiation.  The coefficients, the flux and ``u_exact`` must be free of
    ``abs``/``min``/``max`` (the ``|u|`` inside the coefficient is handled exactly).
    """
    ue = u_exact if isinstance(u_exact, Expression) else field_expr(u_exact)
    ue.require_differentiable("u_exact")
    a, b, phi = _sources(spec)
    a.require_differentiable("a")
    b.require_differentiable("b")
    syms = {"x": _X, "y": _Y, "t": _T}
    u = ue.to_sympy(syms)
    coef = a.to_sympy(syms) / (1 + b.to_sympy(syms) * sympy.Abs(u)) ** sympy.nsimplify(spec.theta)
    f = -(sympy.diff(coef * sympy.diff(u, _X), _X) + sympy.diff(coef * sympy.diff(u, _Y), _Y)) + u
    if phi is not None:
        for comp, var in zip(phi, (_X, _Y)):
            comp.require_differentiable("phi component")
            f = f + sympy.diff(comp.to_sympy(syms).subs(_T, u), var)
    return SymbolicField(f)


def manufactured_spec(u_exact, spec: ProblemSpec):
    """Copy of ``spec`` whose datum is :func:`manufactured_rhs`."""
    f = manufactured_rhs(u_exact, spec)
    sources = dict(spec.sources)
    sources["f"] = f
    sources["u_exact"] = u_exact if isinstance(u_exact, Expression) else field_expr(u_exact)
    return dataclasses.replace(spec, f_data=f, sources=sources)


def convergence_study(spec: ProblemSpec, u_exact, ladder, cfg: SolverConfig = SolverConfig()):
    """Solve on each grid of ``ladder`` and tabulate ``||u_h - u_exact||_L2``.

    Returns a list of dicts with ``nx, ny, h, error_l2, order`` where ``order`` is
    ``log(e_prev/e)/log(h_prev/h)`` (``None`` on the first level).
    """
    ladder = [tuple(p) for p in ladder]
    if len(ladder) < 3:
        raise InsufficientLevels(f"a convergence study needs at least 3 grid levels, got {len(ladder)}")
    ue = u_exact if isinstance(u_exact, Expression) else field_expr(u_exact)
    rows = []
    for nx, ny in ladder:
        grid = Grid(nx, ny, spec.lx, spec.ly)
        result = picard_solve(spec, grid, spec.datum(grid), cfg)
        exact = GridFunction.from_function(grid, lambda x, y: ue(x=x, y=y))
        err = norms(result.u - exact, "L2")
        row = {"nx": nx, "ny": ny, "h": grid.h, "error_l2": err, "order": None,
               "iterations": result.iterations}
        if rows:
            prev = rows[-1]
            row["order"] = math.log(prev["error_l2"] / err) / math.log(prev["h"] / grid.h)
        rows.append(row)
    return rows


def loglog_slope(h, values):
    """Least-squares slope of ``log(values)`` against ``log(h)``."""
    return float(np.polyfit(np.log(np.asarray(h, float)), np.log(np.asarray(values, float)), 1)[0])


def residual_study(spec: ProblemSpec, ladder, cfg: SolverConfig = SolverConfig()):
    """Distributional residuals of the analytic test functions across a grid ladder.

    Returns ``{"h": [...], "residuals": {name: [...]}, "orders": {name: slope},
    "floor": [...]}``.  ``floor`` is ``10 * picard_tol * area * max|phi|`` per
    level, the part of the residual the nonlinear tolerance alone can account
    for.  A test function whose residual stays below the floor on every level
    is resolved exactly by the scheme and gets order ``None``.
    """
    ladder = [tuple(p) for p in ladder]
    if len(ladder) < 3:
        raise InsufficientLevels(f"a residual study needs at least 3 grid levels, got {len(ladder)}")
    hs, floors, table = [], [], {}
    for nx, ny in ladder:
        grid = Grid(nx, ny, spec.lx, spec.ly)
        f = spec.datum(grid)
        result = picard_solve(spec, grid, f, cfg)
        tol = cfg.tolerance_for(f)
        hs.append(grid.h)
        lib = analytic_library(grid)
        floors.append(10.0 * tol * spec.area * max(tf.values.sup() for tf in lib))
        for tf in lib:
            table.setdefault(tf.name, []).append(distributional_residual(result.u, f, spec, tf))
    orders = {}
    for name, values in table.items():
        if all(v <= fl for v, fl in zip(values, floors)):
            orders[name] = None
        else:
            orders[name] = loglog_slope(hs, values)
    return {"h": hs, "residuals": table, "orders": orders, "floor": floors}
