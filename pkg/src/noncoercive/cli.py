"""Command-line front end.

Usage::

    noncoercive solve    <config|preset> [--grid 63x63] [--mode upwind|central] [--out DIR]
    noncoercive verify   <config|preset> --k-list 0 0.5 1 [--c-q 10]
    noncoercive sequence <config|preset> --n-list 1 2 4 8
    noncoercive mms      <config|preset> --u-exact "sin(pi*x)*sin(pi*y)" --ladder 15 31 63
    noncoercive report   <dir>
    noncoercive presets

``--grid`` takes interior node counts (``63`` or ``63x63``; ``h = 1/64``).
``--ladder`` takes one count per level, each square.  Exit status: 0 when every
check passes, 1 when a solve or check fails, 2 on bad input.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import NoncoerciveError
from .estimates import DEFAULT_CQ
from .runner import (
    EXIT_FAILED,
    EXIT_OK,
    EXIT_USAGE,
    apply_overrides,
    build_scenario,
    load_summaries,
    resolve_config,
    run_mms,
    run_scenario,
    run_sequence,
    summary_text,
)
from .scenarios import MANUFACTURED, PRESETS

logger = logging.getLogger("noncoercive")


def grid_arg(text):
    parts = text.lower().replace("×", "x").split("x")
    try:
        dims = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or NXxNY, got {text!r}") from None
    if len(dims) == 1:
        dims = dims * 2
    if len(dims) != 2 or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"expected N or NXxNY with positive N, got {text!r}")
    return tuple(dims)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="noncoercive",
        description="Finite-difference solver and estimate checks for degenerate noncoercive elliptic problems.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="JSON config file or preset name")
    common.add_argument("--grid", type=grid_arg, help="single grid, interior nodes N or NXxNY")
    common.add_argument("--ladder", type=int, nargs="+", metavar="N", help="grid levels N x N")
    common.add_argument("--mode", choices=("upwind", "central"), help="convection scheme")
    common.add_argument("--out", help="output directory (default: nothing written)")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")

    p = sub.add_parser("solve", parents=[common], help="solve, verify estimates and residuals")
    p.add_argument("--dump-matrix", action="store_true", help="write the final system in Matrix Market format")
    p.add_argument("--c-q", type=float, default=DEFAULT_CQ, help="slack constant")

    p = sub.add_parser("verify", parents=[common], help="as solve, with explicit truncation levels")
    p.add_argument("--k-list", type=float, nargs="+", help="truncation levels k")
    p.add_argument("--c-q", type=float, default=DEFAULT_CQ, help="slack constant")

    p = sub.add_parser("sequence", parents=[common], help="data-truncation sweep f_n = T_n(f)")
    p.add_argument("--n-list", type=float, nargs="+", help="truncation heights n")

    p = sub.add_parser("mms", parents=[common], help="manufactured-solution refinement study")
    p.add_argument("--u-exact", help="exact solution expression in x, y")

    p = sub.add_parser("report", help="print the summaries stored under a directory")
    p.add_argument("directory")

    sub.add_parser("presets", help="list the preset scenarios")
    return parser


def _scenario(args):
    ladder = [(n, n) for n in args.ladder] if args.ladder else None
    raw = apply_overrides(
        resolve_config(args.config),
        grid=args.grid,
        ladder=ladder,
        scheme=args.mode,
        k_list=getattr(args, "k_list", None),
        n_list=getattr(args, "n_list", None),
        u_exact=getattr(args, "u_exact", None),
    )
    return build_scenario(raw)


def _report(directory):
    code = EXIT_OK
    for path, summary in load_summaries(directory):
        text = (path / "summary.txt").read_text() if (path / "summary.txt").exists() else ""
        print(f"== {path}")
        print(text, end="")
        if summary.get("exit_code", EXIT_FAILED) != EXIT_OK:
            code = EXIT_FAILED
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * args.verbose
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        if args.command == "presets":
            for name, raw in {**PRESETS, **MANUFACTURED}.items():
                print(f"{name:18} {raw.get('description', 'manufactured: u = ' + str(raw.get('u_exact')))}")
            return EXIT_OK
        if args.command == "report":
            return _report(args.directory)
        scenario = _scenario(args)
        if args.command in ("solve", "verify"):
            art = run_scenario(scenario, args.out, args.format, getattr(args, "dump_matrix", False), args.c_q)
        elif args.command == "sequence":
            art = run_sequence(scenario, args.out, args.format)
        else:
            art = run_mms(scenario, args.out, args.format)
    except NoncoerciveError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(summary_text(art), end="")
    return art.exit_code


if __name__ == "__main__":
    sys.exit(main())
