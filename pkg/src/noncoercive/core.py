"""Problem description, grids, grid functions and the scalar building blocks.

The continuous problem is

    -div( a(x) grad u / (1 + b(x)|u|)**theta ) + u = f - div Phi(u)   in Omega,
    u = 0                                                             on dOmega,

with ``Omega = (0, lx) x (0, ly)``.  ``theta = 2`` is the principal case.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    AssumptionViolation,
    DimensionMismatch,
    GrowthAssumptionViolated,
    InvalidArgument,
)

# Relative allowance for round-off when checking |Phi(t)| <= C t^2.
GROWTH_RTOL = 1e-12


def truncate(v, k):
    """Truncation ``T_k(s) = max(-k, min(s, k))``, nodewise for grid functions.

    Parameters
    ----------
    v : float, ndarray or GridFunction
    k : float
        Truncation height, ``k >= 0``.
    """
    k = float(k)
    if not k >= 0.0:
        raise InvalidArgument(f"truncation level must be >= 0, got {k}")
    if isinstance(v, GridFunction):
        return GridFunction(v.grid, np.clip(v.values, -k, k))
    out = np.clip(np.asarray(v, dtype=float), -k, k)
    return float(out) if out.ndim == 0 else out


def psi(s, i, k):
    """The odd ramp ``psi_{i,k}``: 0 on ``[0, k]``, slope ``i`` up to ``k + 1/i``, then 1."""
    i = float(i)
    k = float(k)
    if not i > 0.0:
        raise InvalidArgument(f"psi requires i > 0, got {i}")
    if not k >= 0.0:
        raise InvalidArgument(f"psi requires k >= 0, got {k}")
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    mag = np.where(a <= k, 0.0, np.where(a <= k + 1.0 / i, i * (a - k), 1.0))
    out = np.sign(s) * mag
    return float(out) if out.ndim == 0 else out


def coefficient(a_val, b_val, u_val, theta):
    """Degenerate diffusion coefficient ``a / (1 + b|u|)**theta``."""
    a_val = np.asarray(a_val, dtype=float)
    b_val = np.asarray(b_val, dtype=float)
    u_val = np.asarray(u_val, dtype=float)
    out = a_val / (1.0 + b_val * np.abs(u_val)) ** float(theta)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``nx * ny`` interior nodes on ``(0, lx) x (0, ly)``.

    Boundary nodes are implicit and carry the value 0.  Interior node ``(i, j)``
    sits at ``((i + 1) * hx, (j + 1) * hy)``; arrays are indexed ``[i, j]`` with
    ``i`` along x, and flattened in C order (``p = i * ny + j``).
    """

    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny or self.nx < 1 or self.ny < 1:
            raise InvalidArgument(f"grid needs positive integer node counts, got {self.nx}x{self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise InvalidArgument("domain side lengths must be positive")

    @property
    def hx(self):
        return self.lx / (self.nx + 1)

    @property
    def hy(self):
        return self.ly / (self.ny + 1)

    @property
    def h(self):
        return max(self.hx, self.hy)

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def size(self):
        return self.nx * self.ny

    @property
    def cell_area(self):
        return self.hx * self.hy

    @property
    def x(self):
        return self.hx * np.arange(1, self.nx + 1)

    @property
    def y(self):
        return self.hy * np.arange(1, self.ny + 1)

    def nodes(self):
        """Interior node coordinates as two ``(nx, ny)`` arrays."""
        return np.meshgrid(self.x, self.y, indexing="ij")

    def nodes_ext(self):
        """Node coordinates including the boundary ring, shape ``(nx+2, ny+2)``."""
        xe = self.hx * np.arange(self.nx + 2)
        ye = self.hy * np.arange(self.ny + 2)
        return np.meshgrid(xe, ye, indexing="ij")

    def xedge_midpoints(self):
        """Midpoints of x-directed edges, shape ``(nx+1, ny)``."""
        xm = self.hx * (np.arange(self.nx + 1) + 0.5)
        return np.meshgrid(xm, self.y, indexing="ij")

    def yedge_midpoints(self):
        """Midpoints of y-directed edges, shape ``(nx, ny+1)``."""
        ym = self.hy * (np.arange(self.ny + 1) + 0.5)
        return np.meshgrid(self.x, ym, indexing="ij")


class GridFunction:
    """Nodal values on the interior of a :class:`Grid` (zero Dirichlet boundary)."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.array(values, dtype=float)
        if values.shape != grid.shape:
            if values.size == grid.size:
                values = values.reshape(grid.shape)
            else:
                raise DimensionMismatch(f"values of shape {values.shape} do not fit grid {grid.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidArgument("grid function values must be finite")
        values.flags.writeable = False
        self.grid = grid
        self.values = values

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid, fn):
        X, Y = grid.nodes()
        return cls(grid, np.broadcast_to(fn(X, Y), grid.shape))

    @property
    def flat(self):
        return self.values.ravel()

    def extended(self):
        """Values padded with the zero boundary ring, shape ``(nx+2, ny+2)``."""
        return np.pad(self.values, 1)

    def sup(self):
        return float(np.max(np.abs(self.values)))

    def check_conformable(self, other):
        if other.grid != self.grid:
            raise DimensionMismatch(f"grid functions live on different grids: {self.grid} vs {other.grid}")

    def _binary(self, other, op):
        if isinstance(other, GridFunction):
            self.check_conformable(other)
            other = other.values
        return GridFunction(self.grid, op(self.values, other))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __repr__(self):
        return f"GridFunction({self.grid.nx}x{self.grid.ny}, sup={self.sup():.3g})"


def _zero_flux(t):
    t = np.asarray(t, dtype=float)
    z = np.zeros_like(t)
    return z, z


def _as_field(fn):
    if isinstance(fn, (int, float)):
        c = float(fn)
        return lambda x, y: np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, c)
    return fn


@dataclass(frozen=True)
class ProblemSpec:
    """The continuous problem: domain, coefficients, flux and datum.

    ``a_field``, ``b_field`` and ``f_data`` are vectorized callables ``(x, y) -> array``;
    ``phi`` maps an array ``t`` to a pair ``(phi_x, phi_y)`` of arrays, or is ``None``
    for the zero flux.  The coefficient bounds are checked on a sampling lattice at
    construction and again on every grid the problem is discretized on.
    """

    a_field: Callable
    b_field: Callable
    f_data: Callable
    alpha: float
    beta: float
    B_bound: float
    theta: float = 2.0
    phi: Optional[Callable] = None
    phi_growth_C: Optional[float] = None
    lx: float = 1.0
    ly: float = 1.0
    name: str = "problem"
    sources: dict = field(default_factory=dict, compare=False, repr=False)
    sample_points: int = 65

    def __post_init__(self):
        object.__setattr__(self, "a_field", _as_field(self.a_field))
        object.__setattr__(self, "b_field", _as_field(self.b_field))
        object.__setattr__(self, "f_data", _as_field(self.f_data))
        if not self.alpha > 0:
            raise AssumptionViolation(f"(ab) requires alpha > 0, got {self.alpha}")
        if not self.beta >= self.alpha:
            raise AssumptionViolation(f"(ab) requires beta >= alpha, got beta={self.beta}, alpha={self.alpha}")
        if not self.B_bound >= 0:
            raise AssumptionViolation(f"(ab) requires B >= 0, got {self.B_bound}")
        if not self.theta >= 0:
            raise InvalidArgument(f"theta must be >= 0, got {self.theta}")
        if self.phi_growth_C is not None and not self.phi_growth_C > 0:
            raise InvalidArgument(f"phi_growth_C must be > 0, got {self.phi_growth_C}")
        sampler = Grid(self.sample_points, self.sample_points, self.lx, self.ly)
        X, Y = sampler.nodes_ext()
        self.check_fields(X, Y)
        if self.phi_growth_C is not None:
            fsup = float(np.max(np.abs(self.f_data(X, Y))))
            T = 10.0 * max(1.0, fsup)
            self.check_growth(np.linspace(-T, T, 4001))

    @property
    def has_flux(self):
        return self.phi is not None

    @property
    def area(self):
        return self.lx * self.ly

    def flux(self, t):
        """Evaluate ``Phi`` on an array, returning ``(phi_x, phi_y)``."""
        if self.phi is None:
            return _zero_flux(t)
        px, py = self.phi(np.asarray(t, dtype=float))
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(px, t.shape).astype(float), np.broadcast_to(py, t.shape).astype(float)

    def check_fields(self, X, Y):
        """Check ``alpha <= a <= beta`` and ``0 <= b <= B`` at the given points."""
        a = np.broadcast_to(self.a_field(X, Y), np.shape(X))
        b = np.broadcast_to(self.b_field(X, Y), np.shape(X))
        f = np.broadcast_to(self.f_data(X, Y), np.shape(X))
        for label, arr in (("a", a), ("b", b), ("f", f)):
            if not np.all(np.isfinite(arr)):
                raise AssumptionViolation(f"{label}(x, y) is not finite at some sample point")
        if np.any(a < self.alpha) or np.any(a > self.beta):
            idx = np.unravel_index(np.argmax((a < self.alpha) | (a > self.beta)), a.shape)
            raise AssumptionViolation(
                f"(ab) 'alpha <= a(x) <= beta' violated: a={a[idx]:.6g} at "
                f"(x, y)=({np.asarray(X)[idx]:.6g}, {np.asarray(Y)[idx]:.6g}), "
                f"alpha={self.alpha}, beta={self.beta}"
            )
        if np.any(b < 0) or np.any(b > self.B_bound):
            idx = np.unravel_index(np.argmax((b < 0) | (b > self.B_bound)), b.shape)
            raise AssumptionViolation(
                f"(ab) '0 <= b(x) <= B' violated: b={b[idx]:.6g} at "
                f"(x, y)=({np.asarray(X)[idx]:.6g}, {np.asarray(Y)[idx]:.6g}), B={self.B_bound}"
            )

    def check_grid(self, grid: Grid):
        """Run the coefficient checks on the nodes and edge midpoints of ``grid``."""
        if (grid.lx, grid.ly) != (self.lx, self.ly):
            raise DimensionMismatch(
                f"grid domain {grid.lx}x{grid.ly} differs from problem domain {self.lx}x{self.ly}"
            )
        for X, Y in (grid.nodes_ext(), grid.xedge_midpoints(), grid.yedge_midpoints()):
            self.check_fields(X, Y)

    def check_growth(self, t):
        """Reject ``|Phi(t)| > C t^2`` (Euclidean norm) at any of the given ``t``."""
        if self.phi_growth_C is None:
            return
        t = np.asarray(t, dtype=float)
        px, py = self.flux(t)
        norm = np.hypot(px, py)
        bound = self.phi_growth_C * t * t
        bad = ~(norm <= bound * (1.0 + GROWTH_RTOL))
        if np.any(bad):
            tb = float(np.ravel(t)[np.argmax(np.ravel(bad))])
            nb = float(np.hypot(*self.flux(tb)))
            raise GrowthAssumptionViolated(
                f"|Phi(t)| <= C t^2 violated at t={tb:.6g}: |Phi|={nb:.6g} > "
                f"{self.phi_growth_C * tb * tb:.6g}; only the entropy formulation applies"
            )

    def sample(self, grid: Grid):
        """Nodal samples ``(a, b, f)`` on the interior of ``grid``."""
        X, Y = grid.nodes()
        shape = grid.shape
        return (
            np.broadcast_to(self.a_field(X, Y), shape).astype(float),
            np.broadcast_to(self.b_field(X, Y), shape).astype(float),
            np.broadcast_to(self.f_data(X, Y), shape).astype(float),
        )

    def datum(self, grid: Grid):
        """``f`` sampled at the interior nodes as a :class:`GridFunction`."""
        return GridFunction.from_function(grid, self.f_data)


def phi_eval(t, spec: ProblemSpec):
    """Evaluate the flux at ``t``; enforce the quadratic growth bound when declared.

    Returns an array of shape ``t.shape + (2,)``.
    """
    spec.check_growth(t)
    px, py = spec.flux(t)
    return np.stack([px, py], axis=-1)
