"""Scenario execution: solve, check and write run artifacts.

Output layout of ``run_scenario`` (``run_sequence`` and ``run_mms`` are analogous)::

    <out>/config.json            resolved configuration
    <out>/summary.json           everything below plus pass flags and exit code
    <out>/summary.txt            human-readable digest
    <out>/levels.csv             one solve row per grid level
    <out>/nested.csv             differences between nested levels
    <out>/level_<nx>x<ny>/       solve, estimates and residual tables of one level

Nothing time- or host-dependent is written, so a rerun reproduces every file.
"""

from __future__ import annotations

import copy
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import reports
from .config import Scenario, read_config, scenario_from_dict
from .core import Grid
from .discretization import FrozenState, assemble, truncation_height, write_matrix_market
from .errors import ConfigParseError, InsufficientLevels, NoncoerciveError
from .estimates import DEFAULT_CQ, EstimateReport, ResidualReport, residual_report, uniform_levelset, verify_apriori
from .mms import convergence_study, loglog_slope
from .scenarios import PRESETS, MANUFACTURED, preset_config
from .solver import SolveResult, approximation_sequence, l2, picard_solve

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def resolve_config(source):
    """Raw config dict for a preset name or a JSON file path."""
    source = str(source)
    if source in PRESETS or source in MANUFACTURED:
        raw = preset_config(source)
        raw.pop("description", None)
        return raw
    path = Path(source)
    if not path.exists():
        known = ", ".join(sorted({**PRESETS, **MANUFACTURED}))
        raise ConfigParseError(f"{source!r} is neither a config file nor a preset ({known})")
    return read_config(path)


def apply_overrides(raw, grid=None, ladder=None, scheme=None, k_list=None, n_list=None, u_exact=None):
    """Copy of ``raw`` with command-line overrides applied."""
    raw = copy.deepcopy(raw)
    if ladder is not None:
        raw.pop("grid", None)
        raw["ladder"] = [list(p) for p in ladder]
    elif grid is not None:
        raw.pop("ladder", None)
        raw["grid"] = {"nx": grid[0], "ny": grid[1]}
    if scheme is not None:
        raw["scheme"] = scheme
    if k_list is not None:
        raw["k_list"] = list(k_list)
    if n_list is not None:
        raw["n_list"] = list(n_list)
    if u_exact is not None:
        raw["u_exact"] = u_exact
        raw.pop("f", None)
    return raw


def build_scenario(raw) -> Scenario:
    return scenario_from_dict(raw, name=raw.get("name"))


@dataclass
class LevelResult:
    grid: Grid
    solve: Optional[SolveResult] = None
    estimates: Optional[EstimateReport] = None
    residuals: Optional[ResidualReport] = None
    error: Optional[str] = None
    max_principle_required: bool = True

    @property
    def label(self):
        return f"{self.grid.nx}x{self.grid.ny}"

    @property
    def passed(self):
        if self.error is not None or self.solve is None or not self.solve.converged:
            return False
        if self.max_principle_required and not self.solve.linf_bound_check:
            return False
        return self.estimates.passed and self.residuals.passed

    def solve_row(self, instance, scheme):
        row = {"instance": instance, "nx": self.grid.nx, "ny": self.grid.ny, "scheme": scheme,
               "error": self.error}
        if self.solve is not None:
            row.update(self.solve.summary())
        else:
            row["converged"] = False
        return row

    def as_dict(self, instance, scheme):
        return {
            "grid": {"nx": self.grid.nx, "ny": self.grid.ny, "h": self.grid.h},
            "passed": self.passed,
            "solve": self.solve_row(instance, scheme),
            "history": [list(h) for h in self.solve.history] if self.solve else [],
            "estimates": self.estimates.as_dict() if self.estimates else None,
            "residuals": self.residuals.as_dict() if self.residuals else None,
        }


@dataclass
class RunArtifacts:
    """Result of one command: per-level data, cross-level table and pass flags."""

    command: str
    scenario: Scenario
    levels: list = field(default_factory=list)
    convergence: list = field(default_factory=list)
    sequence: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    out_dir: Optional[Path] = None

    @property
    def passed(self):
        return all(self.checks.values())

    @property
    def exit_code(self):
        return EXIT_OK if self.passed else EXIT_FAILED

    def as_dict(self):
        sc = self.scenario
        return {
            "schema_version": reports.SCHEMA_VERSION,
            "command": self.command,
            "instance": sc.name,
            "mode": sc.mode,
            "scheme": sc.scheme,
            "config": sc.raw,
            "checks": self.checks,
            "passed": self.passed,
            "exit_code": self.exit_code,
            "levels": [lv.as_dict(sc.name, sc.scheme) for lv in self.levels],
            "convergence": self.convergence,
            "sequence": self.sequence,
        }


def solve_level(scenario: Scenario, grid: Grid, c_q=DEFAULT_CQ, checks=True):
    """Solve on one grid and, if ``checks``, run the estimate and residual suites."""
    spec = scenario.spec
    level = LevelResult(grid, max_principle_required=scenario.scheme == "upwind")
    try:
        f = spec.datum(grid)
        level.solve = picard_solve(spec, grid, f, scenario.solver)
    except NoncoerciveError as exc:
        logger.warning("%s on %dx%d: %s", scenario.name, grid.nx, grid.ny, exc)
        level.error = f"{type(exc).__name__}: {exc}"
        level.solve = getattr(exc, "result", None)
        return level
    if checks:
        u = level.solve.u
        level.estimates = verify_apriori(u, f, spec, scenario.k_list, c_q, scenario.name)
        level.residuals = residual_report(u, f, spec, scenario.k_list, scenario.mode, c_q, scenario.name)
    return level


def nested_differences(levels):
    """``||u_coarse - u_fine||_L2`` on the coarse nodes for consecutive nested levels.

    Levels are nested when ``nx_f + 1 = 2 (nx_c + 1)`` (and likewise in ``y``); the
    coarse node ``i`` then coincides with fine node ``2 i + 1``.  The order column
    is ``log(d_prev / d) / log(2)``.
    """
    rows = []
    for coarse, fine in zip(levels, levels[1:]):
        gc, gf = coarse.grid, fine.grid
        nested = gf.nx + 1 == 2 * (gc.nx + 1) and gf.ny + 1 == 2 * (gc.ny + 1)
        if not nested or not (coarse.solve and fine.solve and coarse.solve.converged and fine.solve.converged):
            continue
        restricted = fine.solve.u.values[1::2, 1::2]
        d = l2(coarse.solve.u.values - restricted, gc)
        row = {"nx": gf.nx, "ny": gf.ny, "h": gf.h, "delta_l2": d, "order": None}
        if rows and rows[-1]["nx"] == gc.nx and d > 0 and rows[-1]["delta_l2"] > 0:
            row["order"] = math.log(rows[-1]["delta_l2"] / d) / math.log(2.0)
        rows.append(row)
    return rows


def _level_dir(out, level):
    return Path(out) / f"level_{level.label}"


def _write_level(out, scenario, level, fmt, dump_matrix):
    d = _level_dir(out, level)
    reports.write_table(d, "solve", [level.solve_row(scenario.name, scenario.scheme)], fmt)
    common = {"instance": scenario.name, "nx": level.grid.nx, "ny": level.grid.ny}
    if level.estimates is not None:
        reports.write_table(d, "estimates", [{**common, **r.as_dict()} for r in level.estimates.rows], fmt)
    if level.residuals is not None:
        reports.write_table(d, "residuals", [{**common, **r.as_dict()} for r in level.residuals.rows], fmt)
    if dump_matrix and level.solve is not None:
        f = scenario.spec.datum(level.grid)
        system = assemble(scenario.spec, level.grid, FrozenState(level.solve.u, truncation_height(f)), f,
                          scenario.scheme)
        write_matrix_market(system, d / "matrix")


def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def summary_text(art: RunArtifacts):
    """Human-readable digest of a run."""
    sc = art.scenario
    lines = [f"{art.command} {sc.name}  (mode={sc.mode}, scheme={sc.scheme})"]
    for lv in art.levels:
        s = lv.solve
        status = "PASS" if lv.passed else "FAIL"
        if s is None:
            lines.append(f"  {lv.label:>9}  {status}  {lv.error}")
            continue
        line = (f"  {lv.label:>9}  {status}  iterations={s.iterations} residual={_fmt(s.residual)} "
                f"|u|inf={_fmt(s.u.sup())} |f|inf={_fmt(s.f_sup)}")
        if lv.estimates is not None:
            line += f" estimates={len(lv.estimates.rows) - len(lv.estimates.failures())}/{len(lv.estimates.rows)}"
            line += f" residuals={len(lv.residuals.rows) - len(lv.residuals.failures())}/{len(lv.residuals.rows)}"
        if lv.error:
            line += f"  [{lv.error}]"
        lines.append(line)
    if art.convergence:
        lines.append("  convergence:")
        for row in art.convergence:
            lines.append("    " + "  ".join(f"{k}={_fmt(v)}" for k, v in row.items()))
    if art.sequence:
        lines.append("  sequence:")
        for row in art.sequence:
            lines.append("    " + "  ".join(
                f"{k}={_fmt(row.get(k))}" for k in ("nx", "n", "iterations", "f_err_l2", "du_l2", "dgrad_l1")))
    for name, ok in art.checks.items():
        lines.append(f"  check {name}: {'pass' if ok else 'FAIL'}")
    lines.append(f"  result: {'PASS' if art.passed else 'FAIL'} (exit {art.exit_code})")
    return "\n".join(lines) + "\n"


def _finish(art: RunArtifacts, out):
    if out is None:
        return art
    out = Path(out)
    art.out_dir = out
    reports.write_json(out / "config.json", art.scenario.raw)
    reports.write_json(out / "summary.json", art.as_dict())
    reports.atomic_write(out / "summary.txt", summary_text(art))
    return art


def run_scenario(scenario: Scenario, out=None, fmt="csv", dump_matrix=False, c_q=DEFAULT_CQ):
    """Solve, verify the a-priori estimates and evaluate residuals on every grid level.

    The run passes (exit code 0) iff every solve converges, every estimate and
    residual check holds within the slack, and, for the upwind scheme, the
    discrete maximum principle ``||u||_inf <= ||f||_inf`` holds exactly.
    """
    art = RunArtifacts("solve", scenario)
    for grid in scenario.grids():
        level = solve_level(scenario, grid, c_q)
        art.levels.append(level)
        if out is not None:
            _write_level(out, scenario, level, fmt, dump_matrix)
    art.convergence = nested_differences(art.levels)
    art.checks = {
        "converged": all(lv.solve is not None and lv.solve.converged and lv.error is None for lv in art.levels),
        "estimates": all(lv.estimates is not None and lv.estimates.passed for lv in art.levels),
        "residuals": all(lv.residuals is not None and lv.residuals.passed for lv in art.levels),
    }
    if scenario.scheme == "upwind":
        art.checks["max_principle"] = all(lv.solve is not None and lv.solve.linf_bound_check for lv in art.levels)
    if out is not None:
        reports.write_table(out, "levels", [lv.solve_row(scenario.name, scenario.scheme) for lv in art.levels], fmt)
        if art.convergence:
            reports.write_table(out, "nested", [{"instance": scenario.name, **r} for r in art.convergence], fmt)
    return _finish(art, out)


def _nonincreasing(values):
    return all(b <= a for a, b in zip(values, values[1:]))


def run_sequence(scenario: Scenario, out=None, fmt="csv"):
    """Data-truncation sweep ``f_n = T_n(f)`` over ``scenario.n_list`` on each grid.

    Checks: every solve converges; ``||f_n - f||_L2`` is nonincreasing in ``n``;
    the level-set bound holds uniformly in ``n``.  Whether ``||u_{2n} - u_n||``
    decreases is recorded in ``du_monotone`` but is an observation, not a check.
    """
    if not scenario.n_list:
        raise ConfigParseError("the sequence command needs n_list (config key or --n-list)", field="n_list")
    art = RunArtifacts("sequence", scenario)
    converged, f_err_ok, levelset_ok = True, True, True
    for grid in scenario.grids():
        entries = approximation_sequence(scenario.spec, grid, scenario.n_list, scenario.solver)
        rows = []
        for e in entries:
            row = {"instance": scenario.name, "nx": grid.nx, "ny": grid.ny, "n": e.n,
                   "converged": e.result is not None and e.result.converged and e.error is None,
                   "iterations": e.result.iterations if e.result else None, "error": e.error, **e.deltas}
            rows.append(row)
        converged &= all(r["converged"] for r in rows)
        f_err_ok &= _nonincreasing([r["f_err_l2"] for r in rows])
        sols = [e.result.u for e in entries if e.result is not None and e.error is None]
        if sols:
            levelset = uniform_levelset(sols, scenario.spec.datum(grid), [k for k in scenario.k_list if k > 0])
            levelset_ok &= levelset["passed"]
        du = [r["du_l2"] for r in rows if r.get("du_l2") is not None]
        final = du[-1] / l2(sols[-1].values, grid) if du and sols and np.any(sols[-1].values) else None
        art.sequence.extend(rows)
        art.convergence.append({"nx": grid.nx, "ny": grid.ny, "du_monotone": _nonincreasing(du),
                                "final_relative_delta": final})
        if out is not None:
            reports.write_table(Path(out) / f"level_{grid.nx}x{grid.ny}", "sequence", rows, fmt)
    art.checks = {"converged": converged, "f_err_nonincreasing": f_err_ok, "uniform_levelset": levelset_ok}
    if out is not None:
        reports.write_table(out, "sequence", art.sequence, fmt)
    return _finish(art, out)


def run_mms(scenario: Scenario, out=None, fmt="csv"):
    """Grid-refinement study against the manufactured solution ``scenario.u_exact``.

    Passes iff every level converges; the observed orders are reported, not judged.
    """
    if scenario.u_exact is None:
        raise ConfigParseError("the mms command needs u_exact (config key or --u-exact)", field="u_exact")
    art = RunArtifacts("mms", scenario)
    try:
        rows = convergence_study(scenario.spec, scenario.u_exact, scenario.ladder, scenario.solver)
    except InsufficientLevels:
        raise
    except NoncoerciveError as exc:
        logger.warning("mms %s: %s", scenario.name, exc)
        art.checks = {"converged": False}
        art.convergence = [{"error": f"{type(exc).__name__}: {exc}"}]
        return _finish(art, out)
    for r in rows:
        r["instance"] = scenario.name
    fit = loglog_slope([r["h"] for r in rows], [r["error_l2"] for r in rows])
    art.convergence = rows + [{"fitted_order": fit}]
    art.checks = {"converged": True}
    if out is not None:
        reports.write_table(out, "convergence", rows, fmt)
    return _finish(art, out)


def load_summaries(directory):
    """Summaries under ``directory``: its own ``summary.json`` and those one level down, sorted."""
    directory = Path(directory)
    paths = []
    if (directory / "summary.json").exists():
        paths.append(directory / "summary.json")
    paths.extend(sorted(p for p in directory.glob("*/summary.json")))
    if not paths:
        raise ConfigParseError(f"no summary.json found in {directory}")
    return [(p.parent, json.loads(p.read_text())) for p in paths]
