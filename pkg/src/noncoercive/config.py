"""JSON problem/scenario configuration.

Schema (all keys optional except ``f``)::

    {
      "name": "paper-core",
      "domain": {"lx": 1.0, "ly": 1.0},
      "grid": {"nx": 63, "ny": 63},
      "ladder": [[15, 15], [31, 31], [63, 63]],
      "alpha": 1.0, "beta": 1.0, "B": 1.0, "theta": 2.0,
      "a": "1", "b": "1", "f": "10*16*x*(1-x)*y*(1-y)",
      "phi": ["t**2", "0"], "phi_growth_C": 1.0,
      "mode": "distributional",          # or "entropy"
      "scheme": "upwind",                # or "central"
      "k_list": [0, 0.25, 0.5, 1, 2, 4],
      "n_list": [1, 2, 4, 8],
      "u_exact": "sin(pi*x)*sin(pi*y)",  # manufactured solution; replaces f
      "solver": {"picard_max_iter": 200, "damping": 1.0}
    }

``phi`` may be omitted or ``null`` for the zero flux.  Expressions follow the
grammar in :mod:`noncoercive.expressions`.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .core import Grid, ProblemSpec
from .discretization import SCHEMES
from .errors import ConfigParseError, NoncoerciveError
from .estimates import DEFAULT_K_LIST
from .expressions import Expression, field as field_expr, flux_component
from .solver import SolverConfig

MODES = ("distributional", "entropy")
KNOWN_KEYS = {
    "name", "domain", "grid", "ladder", "alpha", "beta", "B", "theta", "a", "b", "f", "phi",
    "phi_growth_C", "mode", "scheme", "k_list", "n_list", "u_exact", "solver", "description",
}


def _field_fn(expr: Expression):
    return lambda x, y: expr(x=x, y=y)


def _flux_fn(ex: Expression, ey: Expression):
    return lambda t: (ex(t=t), ey(t=t))


def spec_from_expressions(a="1", b="0", f="0", phi=None, alpha=1.0, beta=1.0, B=0.0, theta=2.0,
                          phi_growth_C=None, lx=1.0, ly=1.0, name="problem"):
    """Build a :class:`ProblemSpec` from expression strings."""
    ea, eb, ef = field_expr(a), field_expr(b), field_expr(f)
    sources = {"a": ea, "b": eb, "f": ef, "phi": None}
    flux = None
    if phi is not None:
        if not isinstance(phi, (list, tuple)) or len(phi) != 2:
            raise ConfigParseError("phi must be a list of two expressions", field="phi")
        ex, ey = flux_component(phi[0]), flux_component(phi[1])
        sources["phi"] = (ex, ey)
        flux = _flux_fn(ex, ey)
    return ProblemSpec(
        a_field=_field_fn(ea),
        b_field=_field_fn(eb),
        f_data=_field_fn(ef),
        alpha=float(alpha),
        beta=float(beta),
        B_bound=float(B),
        theta=float(theta),
        phi=flux,
        phi_growth_C=None if phi_growth_C is None else float(phi_growth_C),
        lx=float(lx),
        ly=float(ly),
        name=name,
        sources=sources,
    )


@dataclass
class Scenario:
    name: str
    spec: ProblemSpec
    ladder: list
    k_list: list = field(default_factory=lambda: list(DEFAULT_K_LIST))
    n_list: list = field(default_factory=list)
    mode: str = "entropy"
    scheme: str = "upwind"
    u_exact: Optional[str] = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    raw: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigParseError(f"mode must be one of {MODES}, got {self.mode!r}", field="mode")
        if self.scheme not in SCHEMES:
            raise ConfigParseError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}", field="scheme")
        if self.solver.scheme != self.scheme:
            # the solver assembles with its own scheme; keep it in step with the scenario
            self.solver = dataclasses.replace(self.solver, scheme=self.scheme)
        if self.mode == "distributional" and self.spec.has_flux and self.spec.phi_growth_C is None:
            raise ConfigParseError(
                "distributional mode needs phi_growth_C (|Phi(t)| <= C t^2); use mode 'entropy' "
                "for fluxes without a growth bound",
                field="phi_growth_C",
            )

    def grids(self):
        return [Grid(nx, ny, self.spec.lx, self.spec.ly) for nx, ny in self.ladder]


def _number(raw, key, default, positive=False):
    v = raw.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigParseError(f"expected a number, got {v!r}", field=key)
    if positive and not v > 0:
        raise ConfigParseError(f"expected a positive number, got {v!r}", field=key)
    return float(v)


def _grid_pair(value, key):
    if isinstance(value, dict):
        try:
            value = [value["nx"], value["ny"]]
        except KeyError as exc:
            raise ConfigParseError(f"missing {exc.args[0]!r}", field=key) from None
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(n, int) and not isinstance(n, bool) and n >= 1 for n in value)
    ):
        raise ConfigParseError(f"expected [nx, ny] with positive integers, got {value!r}", field=key)
    return (int(value[0]), int(value[1]))


def _solver_config(raw, scheme):
    if not isinstance(raw, dict):
        raise ConfigParseError("expected an object", field="solver")
    names = {f.name for f in fields(SolverConfig)} - {"initial", "scheme"}
    unknown = set(raw) - names
    if unknown:
        raise ConfigParseError(f"unknown solver option(s): {', '.join(sorted(unknown))}", field="solver")
    try:
        return SolverConfig(**raw, scheme=scheme)
    except (TypeError, NoncoerciveError) as exc:
        raise ConfigParseError(str(exc), field="solver") from None


def scenario_from_dict(raw: dict, name=None):
    """Validate a config mapping and build the :class:`Scenario`."""
    if not isinstance(raw, dict):
        raise ConfigParseError("top-level config must be a JSON object")
    unknown = set(raw) - KNOWN_KEYS
    if unknown:
        raise ConfigParseError(f"unknown key(s): {', '.join(sorted(unknown))}")
    name = raw.get("name", name or "scenario")
    domain = raw.get("domain", {"lx": 1.0, "ly": 1.0})
    if not isinstance(domain, dict):
        raise ConfigParseError("expected an object with lx, ly", field="domain")
    lx = _number(domain, "lx", 1.0, positive=True)
    ly = _number(domain, "ly", 1.0, positive=True)

    if "u_exact" in raw:
        f_src = "0"
    elif "f" in raw:
        f_src = raw["f"]
    else:
        raise ConfigParseError("missing datum expression", field="f")
    exprs = {}
    for key, default in (("a", "1"), ("b", "0")):
        exprs[key] = raw.get(key, default)
    phi = raw.get("phi")
    C = raw.get("phi_growth_C")
    if C is not None:
        C = _number(raw, "phi_growth_C", None, positive=True)

    kwargs = dict(
        alpha=_number(raw, "alpha", 1.0, positive=True),
        beta=_number(raw, "beta", 1.0, positive=True),
        B=_number(raw, "B", 0.0),
        theta=_number(raw, "theta", 2.0),
        phi_growth_C=C,
        lx=lx,
        ly=ly,
        name=name,
    )
    spec = spec_from_expressions(a=exprs["a"], b=exprs["b"], f=f_src, phi=phi, **kwargs)

    u_exact = raw.get("u_exact")
    if u_exact is not None:
        from .mms import manufactured_spec

        spec = manufactured_spec(u_exact, spec)

    if "ladder" in raw:
        if not isinstance(raw["ladder"], list) or not raw["ladder"]:
            raise ConfigParseError("expected a non-empty list of [nx, ny]", field="ladder")
        ladder = [_grid_pair(p, "ladder") for p in raw["ladder"]]
    else:
        ladder = [_grid_pair(raw.get("grid", {"nx": 31, "ny": 31}), "grid")]

    def num_list(key, default):
        v = raw.get(key, default)
        if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
            raise ConfigParseError("expected a list of numbers", field=key)
        return [float(x) for x in v]

    scheme = raw.get("scheme", "upwind")
    if scheme not in SCHEMES:
        raise ConfigParseError(f"scheme must be one of {SCHEMES}, got {scheme!r}", field="scheme")
    return Scenario(
        name=name,
        spec=spec,
        ladder=ladder,
        k_list=num_list("k_list", list(DEFAULT_K_LIST)),
        n_list=num_list("n_list", []),
        mode=raw.get("mode", "distributional" if (phi is None or C is not None) else "entropy"),
        scheme=scheme,
        u_exact=u_exact,
        solver=_solver_config(raw.get("solver", {}), scheme),
        raw=raw,
    )


def read_config(path):
    """Parse a JSON config file into a dict without validating it."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if isinstance(raw, dict):
        raw.setdefault("name", path.stem)
    return raw


def load_config(path):
    """Read a JSON config file into a :class:`Scenario`."""
    return scenario_from_dict(read_config(path), name=Path(path).stem)
