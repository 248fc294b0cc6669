"""Preset scenario corpus.

Parameter values are choices made for this package (the problem family fixes
only the structure): unit square, ``a = 1``, and the datum scaled so that the
degenerate coefficient is exercised without breaking the Picard iteration.
"""

from __future__ import annotations

import copy
import math

from .config import scenario_from_dict
from .errors import ConfigParseError

BUMP = "16*x*(1-x)*y*(1-y)"
K_LIST = [0, 0.25, 0.5, 1, 2, 4]
SPIKE_N_LIST = [1, 2, 4, 8, 16, 32, 64, 128]


def singular_expression(scale=0.5, exponent=0.9, centre=(0.51, 0.49)):
    """``scale * r**(-exponent)`` about ``centre``: unbounded but in L2 for ``exponent < 1``.

    The default centre is not a node of the standard grids, so nodal samples are
    finite, and ``{f >= 1}`` stays inside the unit square.
    """
    cx, cy = centre
    return f"{float(scale)!r}*((x-{cx!r})**2+(y-{cy!r})**2)**(-{exponent / 2!r})"


def spike_expression(height, l2_norm=None, width=0.05, centre=(0.5, 0.5)):
    """Gaussian spike ``height * exp(-r^2 / (2 s^2))``.

    With ``l2_norm`` given, the width is chosen so that the spike has that
    L2 norm on the whole plane (``height * s * sqrt(pi)``), so sweeping the
    height at fixed norm concentrates the datum.
    """
    if l2_norm is not None:
        width = l2_norm / (height * math.sqrt(math.pi))
    cx, cy = centre
    return f"{float(height)!r}*exp(-((x-{cx!r})**2+(y-{cy!r})**2)/(2*{float(width)!r}**2))"


PRESETS = {
    "linear-sanity": {
        "description": "a=1, b=0, no flux, f=1: linear, nondegenerate",
        "a": "1", "b": "0", "alpha": 1, "beta": 1, "B": 0, "theta": 2,
        "f": "1", "phi": None, "mode": "distributional",
    },
    "paper-core": {
        "description": "theta=2, b=1, Phi=(t^2, 0) with C=1: distributional regime",
        "a": "1", "b": "1", "alpha": 1, "beta": 1, "B": 1, "theta": 2,
        "f": f"10*{BUMP}", "phi": ["t**2", "0"], "phi_growth_C": 1, "mode": "distributional",
    },
    "entropy-only": {
        "description": "Phi=(e^t - 1, 0), no growth bound: entropy regime only",
        "a": "1", "b": "1", "alpha": 1, "beta": 1, "B": 1, "theta": 2,
        "f": f"4*{BUMP}", "phi": ["exp(t)-1", "0"], "mode": "entropy",
    },
    "bco-limit": {
        "description": "no flux term, theta=2, b=1",
        "a": "1", "b": "1", "alpha": 1, "beta": 1, "B": 1, "theta": 2,
        "f": f"10*{BUMP}", "phi": None, "mode": "distributional",
    },
    "spike": {
        "description": "L2 datum with a point singularity, f = 0.5 r^-0.9, for the data-truncation sequence",
        "a": "1", "b": "1", "alpha": 1, "beta": 1, "B": 1, "theta": 2,
        "f": singular_expression(), "phi": ["t**2", "0"], "phi_growth_C": 1,
        "mode": "distributional", "n_list": SPIKE_N_LIST,
    },
    "gaussian-spike": {
        "description": "Gaussian datum of height 100 and width 0.05",
        "a": "1", "b": "1", "alpha": 1, "beta": 1, "B": 1, "theta": 2,
        "f": spike_expression(100.0, width=0.05), "phi": ["t**2", "0"], "phi_growth_C": 1,
        "mode": "distributional", "n_list": SPIKE_N_LIST,
    },
}

for _theta in (0, 1, 2, 3):
    PRESETS[f"theta-sweep-{_theta}"] = {
        "description": f"exponent theta={_theta} in the degenerate coefficient",
        "a": "1", "b": "1", "alpha": 1, "beta": 1, "B": 1, "theta": _theta,
        "f": f"10*{BUMP}", "phi": ["t**2", "0"], "phi_growth_C": 1, "mode": "distributional",
    }

# manufactured instances for grid-refinement studies
MANUFACTURED = {
    "linear-sanity-mms": {
        "a": "1+0.5*sin(pi*x)*cos(pi*y)", "b": "0", "alpha": 0.5, "beta": 1.5, "B": 0,
        "phi": None, "u_exact": "sin(pi*x)*sin(pi*y)", "scheme": "central", "mode": "distributional",
    },
    "paper-core-mms": {
        "a": "1", "b": "1", "alpha": 1, "beta": 1, "B": 1, "theta": 2,
        "phi": ["t**2", "0"], "phi_growth_C": 1, "u_exact": "sin(pi*x)*sin(pi*y)",
        "scheme": "upwind", "mode": "distributional",
    },
}

CORPUS = ["linear-sanity", "paper-core", "entropy-only", "bco-limit", "spike", "gaussian-spike",
          "theta-sweep-0", "theta-sweep-1", "theta-sweep-2", "theta-sweep-3"]


def preset_config(name, grid=(63, 63), ladder=None, **overrides):
    """The raw config dict of a preset, with grid/ladder and extra keys applied."""
    table = PRESETS if name in PRESETS else MANUFACTURED
    if name not in table:
        raise ConfigParseError(f"unknown preset {name!r}; known: {', '.join(sorted({**PRESETS, **MANUFACTURED}))}")
    raw = copy.deepcopy(table[name])
    raw["name"] = name
    raw.setdefault("k_list", list(K_LIST))
    if ladder is not None:
        raw["ladder"] = [list(p) for p in ladder]
    else:
        raw["grid"] = {"nx": grid[0], "ny": grid[1]}
    if raw.get("phi") is None:
        raw.pop("phi", None)
    raw.update(overrides)
    return raw


def preset(name, grid=(63, 63), ladder=None, **overrides):
    """Build the :class:`~noncoercive.config.Scenario` for a preset."""
    return scenario_from_dict(preset_config(name, grid, ladder, **overrides))
