"""Command-line entry points.

Subcommands:

    solve            solve the configured eigenproblem, write solution files
    verify           full pipeline: solve, constants, all configured checks
    constants        solve and report the barrier constants only
    probe-boundary   solve and run the boundary probe
    sweep            solve and run the continuity sweep
    oracle-fixtures  regenerate the frozen oracle fixtures file

Shared flags: --config PATH, --out DIR, --h, --preset, --checks, --tol-scale.
Exit codes: 0 pass, 1 check failure, 2 configuration error, 3 numerical error.
The environment variable LOGCAVE_FIXTURES overrides the fixtures path.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import CHECK_IDS, ConfigError, load_config
from .eigensolver import AssemblyError, ConvergenceError
from .geometry import GeometryError
from .barriers import HypothesisError
from .oracles import OracleError
from .report import EXIT_CONFIG_ERROR, EXIT_NUMERICAL_ERROR, run

_NUMERICAL_ERRORS = (AssemblyError, ConvergenceError, GeometryError, OracleError,
                     HypothesisError, FloatingPointError)


def _add_shared(p):
    p.add_argument("--config", required=True, help="path to the run config JSON")
    p.add_argument("--out", default=None, help="output directory (overrides config)")
    p.add_argument("--h", type=float, default=None, help="grid spacing override")
    p.add_argument("--preset", default=None, help="constants preset override")
    p.add_argument("--checks", default=None,
                   help=f"comma-separated checks (of {', '.join(CHECK_IDS)})")
    p.add_argument("--tol-scale", type=float, default=None, help="tolerance scale override")


def _apply_overrides(cfg, args, forced_checks=None):
    if args.h is not None:
        cfg.setdefault("grid", {})["h"] = args.h
        cfg["grid"].pop("level", None)
    if args.preset is not None:
        cfg.setdefault("constants", {})["preset"] = args.preset
    if args.checks is not None:
        cfg["checks"] = [c.strip() for c in args.checks.split(",") if c.strip()]
    if forced_checks is not None:
        cfg["checks"] = list(forced_checks)
    if args.tol_scale is not None:
        cfg.setdefault("tolerances", {})["tol_scale"] = args.tol_scale
    return cfg


def _execute(args, forced_checks=None):
    try:
        cfg = _apply_overrides(dict(load_config(args.config)), args, forced_checks)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        result = run(cfg, out_dir=args.out)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except _NUMERICAL_ERRORS as e:
        print(f"numerical error: {e}", file=sys.stderr)
        if args.out:
            from pathlib import Path

            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            with open(out / "report.json", "w") as fh:
                json.dump({"error": {"type": type(e).__name__, "message": str(e)}},
                          fh, indent=1, sort_keys=True)
        return EXIT_NUMERICAL_ERROR
    print((result.out_dir / "report.txt").read_text(), end="")
    return result.exit_code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="logcave",
        description="Verification lab for log-concavity estimates of principal "
                    "Dirichlet eigenfunctions on curved surfaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, forced in (
        ("solve", []),
        ("verify", None),
        ("constants", []),
        ("probe-boundary", ["boundary-probe"]),
        ("sweep", ["sweep"]),
    ):
        p = sub.add_parser(name)
        _add_shared(p)
        p.set_defaults(forced_checks=forced)

    pf = sub.add_parser("oracle-fixtures", help="recompute the frozen oracle fixtures")
    pf.add_argument("--out", default=None, help="fixtures path (default: packaged location)")

    args = parser.parse_args(argv)
    if args.command == "oracle-fixtures":
        from .oracles import write_fixtures

        try:
            path = write_fixtures(args.out)
        except OracleError as e:
            print(f"numerical error: {e}", file=sys.stderr)
            return EXIT_NUMERICAL_ERROR
        print(f"fixtures written to {path}")
        return 0
    return _execute(args, forced_checks=args.forced_checks)


if __name__ == "__main__":
    sys.exit(main())
