"""Damped Picard iteration on the frozen-coefficient map, and the data-truncation sweep."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pyamg
import scipy.sparse.linalg as spla

from .core import Grid, GridFunction, ProblemSpec, truncate
from .discretization import FrozenState, SparseSystem, assemble, truncation_height
from .errors import InvalidArgument, LinearSolverFailure, NoncoerciveError, NonlinearNonconvergence

logger = logging.getLogger(__name__)

LINEAR_METHODS = ("auto", "direct", "krylov")
# Consecutive increases of the update norm that trigger halving of the damping.
OSCILLATION_WINDOW = 3


@dataclass(frozen=True)
class SolverConfig:
    """Iteration parameters.

    ``picard_tol=None`` means ``1e-10 * (1 + ||f_n||_inf)``.  The Picard loop
    stops when the sup-norm residual of the nonlinear discrete system at the new
    iterate is below ``picard_tol``.
    """

    picard_tol: Optional[float] = None
    picard_max_iter: int = 200
    damping: float = 1.0
    linear_tol: float = 1e-12
    linear_max_iter: int = 500
    initial_guess: str = "zero"
    initial: Optional[GridFunction] = None
    scheme: str = "upwind"
    linear_method: str = "auto"
    adaptive_damping: bool = True

    def __post_init__(self):
        if self.picard_tol is not None and not self.picard_tol > 0:
            raise InvalidArgument("picard_tol must be positive")
        if not self.linear_tol > 0:
            raise InvalidArgument("linear_tol must be positive")
        if not 0 < self.damping <= 1:
            raise InvalidArgument(f"damping must lie in (0, 1], got {self.damping}")
        if self.picard_max_iter < 1 or self.linear_max_iter < 1:
            raise InvalidArgument("iteration limits must be positive")
        if self.initial_guess not in ("zero", "provided"):
            raise InvalidArgument(f"initial_guess must be 'zero' or 'provided', got {self.initial_guess!r}")
        if self.initial_guess == "provided" and self.initial is None:
            raise InvalidArgument("initial_guess='provided' needs an initial grid function")
        if self.linear_method not in LINEAR_METHODS:
            raise InvalidArgument(f"linear_method must be one of {LINEAR_METHODS}")

    def tolerance_for(self, f_n: GridFunction):
        if self.picard_tol is not None:
            return self.picard_tol
        return 1e-10 * (1.0 + f_n.sup())


@dataclass
class SolveResult:
    u: GridFunction
    iterations: int
    history: list = field(default_factory=list)  # (index, sup-norm update, nonlinear residual)
    linf_bound_check: bool = False
    converged: bool = False
    damping: float = 1.0
    f_sup: float = 0.0

    @property
    def residual(self):
        return self.history[-1][2] if self.history else float("nan")

    def summary(self):
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "final_residual": self.residual,
            "final_update": self.history[-1][1] if self.history else None,
            "linf_u": self.u.sup(),
            "linf_f_n": self.f_sup,
            "linf_bound_check": self.linf_bound_check,
            "final_damping": self.damping,
        }


def _is_symmetric(A):
    diff = A - A.T
    return diff.nnz == 0 or np.max(np.abs(diff.data)) == 0.0


def residual_bound(system: SparseSystem, cfg: SolverConfig, x=None):
    """Acceptance threshold ``linear_tol * (1 + ||rhs||_inf)`` plus a round-off floor.

    The floor ``64 eps ||A||_inf ||x||_inf`` is the accuracy with which ``A x - b`` can
    be evaluated at all; on fine grids ``||A||_inf ~ 8/h^2`` makes it the binding term.
    """
    bound = cfg.linear_tol * (1.0 + float(np.max(np.abs(system.rhs), initial=0.0)))
    if x is not None:
        anorm = float(abs(system.matrix).sum(axis=1).max()) if system.matrix.nnz else 0.0
        bound += 64.0 * np.finfo(float).eps * anorm * float(np.max(np.abs(x), initial=0.0))
    return bound


def linear_solve(system: SparseSystem, cfg: SolverConfig = SolverConfig()):
    """Solve ``matrix @ x = rhs``.

    Symmetric systems (no flux term) use conjugate gradients preconditioned by
    smoothed-aggregation AMG; nonsymmetric ones a sparse LU factorization.
    Raises :class:`LinearSolverFailure` when the sup-norm residual misses
    :func:`residual_bound`.
    """
    A = system.matrix
    b = system.rhs
    method = cfg.linear_method
    if method == "auto":
        method = "krylov" if _is_symmetric(A) else "direct"

    history = []
    if method == "direct":
        x = spla.splu(A.tocsc()).solve(b)
        history.append(float(np.max(np.abs(A @ x - b), initial=0.0)))
    else:
        if not np.any(b):
            x = np.zeros_like(b)
            history.append(0.0)
        else:
            # "local" weighting avoids pyamg's randomized spectral-radius estimate
            ml = pyamg.smoothed_aggregation_solver(
                A.tocsr(), symmetry="symmetric", smooth=("jacobi", {"weighting": "local"})
            )
            x = np.zeros_like(b)
            target = cfg.linear_tol * (1.0 + float(np.max(np.abs(b))))
            # a couple of restarts recover from drift of the recursive CG residual
            for _ in range(3):
                x, info = spla.cg(
                    A, b, x0=x, rtol=0.0, atol=target, maxiter=cfg.linear_max_iter, M=ml.aspreconditioner()
                )
                res = float(np.max(np.abs(A @ x - b)))
                history.append(res)
                if res <= residual_bound(system, cfg, x):
                    break

    res = history[-1]
    bound = residual_bound(system, cfg, x)
    if not res <= bound:
        raise LinearSolverFailure(
            f"linear solve ({method}) residual {res:.3e} exceeds {bound:.3e}", residual_history=history
        )
    return GridFunction(system.grid, x)


def picard_solve(spec: ProblemSpec, grid: Grid, f_n: GridFunction, cfg: SolverConfig = SolverConfig()):
    """Fixed point of ``w -> (1 - d) w + d * solve(assemble(w))``.

    The coefficient and flux are frozen at ``T_M(w)`` with ``M = ||f_n||_inf + 1``.
    On convergence ``||L_u u - f_n||_inf <= picard_tol``.  The damping ``d`` is
    halved whenever the update norm grows for three consecutive iterations
    (``cfg.adaptive_damping``).

    Raises :class:`NonlinearNonconvergence` (carrying the history and the last
    iterate as a non-converged :class:`SolveResult`) after ``picard_max_iter``
    iterations.
    """
    if f_n.grid != grid:
        raise InvalidArgument("datum is not defined on the solve grid")
    tol = cfg.tolerance_for(f_n)
    M = truncation_height(f_n)
    if cfg.initial_guess == "provided":
        cfg.initial.check_conformable(f_n)
        w = cfg.initial
    else:
        w = GridFunction.zeros(grid)

    damping = cfg.damping
    history = []
    system = assemble(spec, grid, FrozenState(w, M), f_n, cfg.scheme)
    increases = 0
    for it in range(1, cfg.picard_max_iter + 1):
        target = linear_solve(system, cfg)
        if damping == 1.0:
            w_new = target
        else:
            w_new = GridFunction(grid, (1.0 - damping) * w.values + damping * target.values)
        update = float(np.max(np.abs(w_new.values - w.values)))
        system = assemble(spec, grid, FrozenState(w_new, M), f_n, cfg.scheme)
        res = float(np.max(np.abs(system.residual(w_new))))
        if history and update > history[-1][1]:
            increases += 1
        else:
            increases = 0
        history.append((it, update, res))
        w = w_new
        if res <= tol:
            return SolveResult(
                u=w,
                iterations=it,
                history=history,
                linf_bound_check=bool(w.sup() <= f_n.sup()),
                converged=True,
                damping=damping,
                f_sup=f_n.sup(),
            )
        if cfg.adaptive_damping and increases >= OSCILLATION_WINDOW:
            damping *= 0.5
            increases = 0
            logger.info("picard: update grew %d times, damping halved to %g", OSCILLATION_WINDOW, damping)

    result = SolveResult(
        u=w,
        iterations=cfg.picard_max_iter,
        history=history,
        linf_bound_check=bool(w.sup() <= f_n.sup()),
        converged=False,
        damping=damping,
        f_sup=f_n.sup(),
    )
    raise NonlinearNonconvergence(
        f"Picard iteration did not reach residual {tol:.3e} in {cfg.picard_max_iter} iterations "
        f"(last residual {history[-1][2]:.3e})",
        history=history,
        result=result,
    )


@dataclass
class SequenceEntry:
    n: float
    result: Optional[SolveResult]
    deltas: dict
    error: Optional[str] = None


def l2(values, grid):
    return float(np.sqrt(np.sum(values * values) * grid.cell_area))


def grad_l1(values, grid):
    """Discrete ``int |grad v|`` with forward differences on cells (zero boundary)."""
    ve = np.pad(values, 1)
    gx = (ve[1:, :-1] - ve[:-1, :-1]) / grid.hx
    gy = (ve[:-1, 1:] - ve[:-1, :-1]) / grid.hy
    return float(np.sum(np.hypot(gx, gy)) * grid.cell_area)


def approximation_sequence(spec: ProblemSpec, grid: Grid, n_list, cfg: SolverConfig = SolverConfig()):
    """Solve with the truncated data ``f_n = T_n(f)`` for each ``n`` in ``n_list``.

    Each entry reports ``f_err_l2 = ||f_n - f||_L2``, and relative to the previous
    successful entry ``du_l2 = ||u_n - u_prev||_L2`` and ``dgrad_l1 =
    ||grad(u_n - u_prev)||_L1``.  A failing solve is recorded in ``error`` and
    the sweep continues.
    """
    n_list = [float(n) for n in n_list]
    if not n_list:
        raise InvalidArgument("n_list is empty")
    if any(n <= 0 for n in n_list) or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise InvalidArgument("n_list must be positive and strictly increasing")
    f = spec.datum(grid)
    entries = []
    prev = None
    for n in n_list:
        f_n = truncate(f, n)
        deltas = {"f_err_l2": l2(f_n.values - f.values, grid)}
        try:
            res = picard_solve(spec, grid, f_n, cfg)
        except NoncoerciveError as exc:
            logger.warning("sequence entry n=%g failed: %s", n, exc)
            entries.append(SequenceEntry(n, getattr(exc, "result", None), deltas, error=str(exc)))
            continue
        if prev is not None:
            diff = res.u.values - prev.u.values
            deltas["du_l2"] = l2(diff, grid)
            deltas["dgrad_l1"] = grad_l1(diff, grid)
        entries.append(SequenceEntry(n, res, deltas))
        prev = res
    return entries
