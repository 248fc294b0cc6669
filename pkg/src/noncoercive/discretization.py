"""Frozen-coefficient finite-difference assembly.

For a frozen iterate ``w`` the linear operator is

    L_w u = -div_h( mu(w) grad_h u ) + u + div_h F_w(u)

on the interior nodes, with homogeneous Dirichlet values eliminated.

* ``mu`` on an edge is the harmonic mean of ``a / (1 + b|T_M(w)|)**theta`` at the
  two end nodes.  Boundary nodes carry ``w = 0``.
* The flux term uses the frozen secant slope ``s = (Phi(T_M w_R) - Phi(T_M w_L)) /
  (T_M w_R - T_M w_L)`` on each edge and the numerical flux

      F = (Phi_L + Phi_R)/2 - lam/2 (u_R - u_L),   Phi_R - Phi_L := s (u_R - u_L),

  with ``lam = |s|`` (upwind) or ``lam = 0`` (central).  Only flux differences
  across edges are ever used.  In upwind mode every row has nonpositive
  off-diagonals and ``diag - sum|offdiag| >= 1``.

At a fixed point ``u = w`` with ``|u| <= M`` this is the conservative scheme with
the upwind flux ``F(u_L, u_R) = (Phi(u_L) + Phi(u_R))/2 - |s|/2 (u_R - u_L)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .core import Grid, GridFunction, ProblemSpec, coefficient
from .errors import DimensionMismatch, InvalidArgument

SCHEMES = ("upwind", "central")


@dataclass(frozen=True)
class FrozenState:
    """Current iterate ``w`` and truncation height ``M`` (``M = inf`` disables it)."""

    w: GridFunction
    M: float

    def __post_init__(self):
        if not self.M >= 0:
            raise InvalidArgument(f"truncation height must be >= 0, got {self.M}")

    def truncated_ext(self):
        return np.clip(self.w.extended(), -self.M, self.M)


@dataclass(frozen=True)
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    grid: Grid
    scheme: str = "upwind"

    def residual(self, v: GridFunction):
        """``matrix @ v - rhs`` as a flat array."""
        return self.matrix @ v.flat - self.rhs


def truncation_height(f_n: GridFunction):
    """``M = ||f_n||_inf + 1``."""
    return f_n.sup() + 1.0


def node_coefficients(spec: ProblemSpec, grid: Grid, w_ext):
    """Diffusion coefficient at every node including the boundary ring."""
    X, Y = grid.nodes_ext()
    a = np.broadcast_to(spec.a_field(X, Y), X.shape)
    b = np.broadcast_to(spec.b_field(X, Y), X.shape)
    return coefficient(a, b, w_ext, spec.theta)


def harmonic_mean(c1, c2):
    return 2.0 * c1 * c2 / (c1 + c2)


def edge_coefficients(spec: ProblemSpec, grid: Grid, w_ext):
    """Harmonic-mean edge coefficients ``(mu_x, mu_y)``.

    ``mu_x[k, j]`` joins extended nodes ``(k, j+1)`` and ``(k+1, j+1)``,
    shape ``(nx+1, ny)``; ``mu_y`` is the analogue with shape ``(nx, ny+1)``.
    """
    c = node_coefficients(spec, grid, w_ext)
    mu_x = harmonic_mean(c[:-1, 1:-1], c[1:, 1:-1])
    mu_y = harmonic_mean(c[1:-1, :-1], c[1:-1, 1:])
    return mu_x, mu_y


def secant_slopes(fn, wl, wr):
    """Edge slopes ``(fn(wr) - fn(wl)) / (wr - wl)``; derivative where ``wl == wr``."""
    wl = np.asarray(wl, dtype=float)
    wr = np.asarray(wr, dtype=float)
    dw = wr - wl
    df = fn(wr) - fn(wl)
    same = dw == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(same, 0.0, df / np.where(same, 1.0, dw))
    if np.any(same):
        delta = 1e-6 * (1.0 + np.abs(wl[same]))
        s[same] = (fn(wl[same] + delta) - fn(wl[same] - delta)) / (2.0 * delta)
    return s


def edge_slopes(spec: ProblemSpec, w_ext):
    """Secant slopes of ``Phi_x`` on x-edges and ``Phi_y`` on y-edges."""
    if not spec.has_flux:
        return np.zeros((w_ext.shape[0] - 1, w_ext.shape[1] - 2)), np.zeros(
            (w_ext.shape[0] - 2, w_ext.shape[1] - 1)
        )
    sx = secant_slopes(lambda t: spec.flux(t)[0], w_ext[:-1, 1:-1], w_ext[1:, 1:-1])
    sy = secant_slopes(lambda t: spec.flux(t)[1], w_ext[1:-1, :-1], w_ext[1:-1, 1:])
    return sx, sy


def _dissipation(s, scheme):
    if scheme == "upwind":
        return np.abs(s)
    if scheme == "central":
        return np.zeros_like(s)
    raise InvalidArgument(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def assemble(spec: ProblemSpec, grid: Grid, frozen: FrozenState, f_n: GridFunction, scheme="upwind"):
    """Assemble the frozen linear system ``L_w u = f_n``.

    Rows are assembled in node order with entries sorted by column
    (west, south, centre, north, east), so the output is bit-identical for
    identical input.
    """
    if frozen.w.grid != grid:
        raise DimensionMismatch("frozen iterate is not defined on the assembly grid")
    if f_n.grid != grid:
        raise DimensionMismatch("datum is not defined on the assembly grid")
    spec.check_grid(grid)
    nx, ny = grid.shape
    hx, hy = grid.hx, grid.hy

    w_ext = frozen.truncated_ext()
    mu_x, mu_y = edge_coefficients(spec, grid, w_ext)
    s_x, s_y = edge_slopes(spec, w_ext)
    l_x = _dissipation(s_x, scheme)
    l_y = _dissipation(s_y, scheme)

    # left/right (x) and down/up (y) edges of every interior node
    muW, muE = mu_x[:-1], mu_x[1:]
    muS, muN = mu_y[:, :-1], mu_y[:, 1:]
    sW, sE = s_x[:-1], s_x[1:]
    lW, lE = l_x[:-1], l_x[1:]
    sS, sN = s_y[:, :-1], s_y[:, 1:]
    lS, lN = l_y[:, :-1], l_y[:, 1:]

    west = -muW / hx**2 - (sW + lW) / (2.0 * hx)
    east = -muE / hx**2 + (sE - lE) / (2.0 * hx)
    south = -muS / hy**2 - (sS + lS) / (2.0 * hy)
    north = -muN / hy**2 + (sN - lN) / (2.0 * hy)
    diag_x = (muW + muE) / hx**2 + ((sW + lW) - (sE - lE)) / (2.0 * hx)
    diag_y = (muS + muN) / hy**2 + ((sS + lS) - (sN - lN)) / (2.0 * hy)
    centre = (diag_x + diag_y) + 1.0

    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    P = I * ny + J
    vals = np.stack([west, south, centre, north, east], axis=-1)
    cols = np.stack([P - ny, P - 1, P, P + 1, P + ny], axis=-1)
    keep = np.stack([I > 0, J > 0, np.ones_like(I, bool), J < ny - 1, I < nx - 1], axis=-1)

    vals = vals.reshape(-1, 5)
    cols = cols.reshape(-1, 5)
    keep = keep.reshape(-1, 5)
    indptr = np.concatenate([[0], np.cumsum(keep.sum(axis=1))])
    matrix = sp.csr_matrix((vals[keep], cols[keep], indptr), shape=(grid.size, grid.size))
    return SparseSystem(matrix=matrix, rhs=f_n.flat.copy(), grid=grid, scheme=scheme)


def apply_operator(system: SparseSystem, v: GridFunction):
    """Matrix-vector product ``matrix @ v``."""
    if v.grid != system.grid:
        raise DimensionMismatch("grid function does not match the system grid")
    return GridFunction(system.grid, system.matrix @ v.flat)


def nonlinear_residual(spec, grid, u: GridFunction, f_n: GridFunction, M=np.inf, scheme="upwind"):
    """Residual ``L_u u - f_n`` of the full nonlinear discrete system."""
    system = assemble(spec, grid, FrozenState(u, M), f_n, scheme)
    return GridFunction(grid, system.residual(u))


def write_matrix_market(system: SparseSystem, prefix):
    """Dump ``<prefix>.mtx`` (coordinate) and ``<prefix>_rhs.mtx`` (array)."""
    prefix = str(prefix)
    scipy.io.mmwrite(prefix + ".mtx", system.matrix.tocoo(), field="real", symmetry="general")
    scipy.io.mmwrite(prefix + "_rhs.mtx", system.rhs.reshape(-1, 1), field="real")
    return prefix + ".mtx", prefix + "_rhs.mtx"
