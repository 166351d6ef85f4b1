"""``lanesim`` command line.

Exit codes: 0 success, 1 bad configuration or input files, 2 runtime failure.
Set ``LANESIM_LOG`` to error, info or debug for log output on stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import config as cfgmod
from .errors import LanesimError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _setup_logging():
    level = os.environ.get("LANESIM_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _err(msg):
    print(f"lanesim: {msg}", file=sys.stderr)


def cmd_run(args) -> int:
    from .report import execute_run
    try:
        resolved = cfgmod.run_config(cfgmod.load_config(args.config), args.seed)
        cfgmod.build_scenario(resolved)
    except LanesimError as exc:
        _err(exc)
        return EXIT_CONFIG
    try:
        execute_run(resolved, args.out)
    except Exception as exc:
        _err(f"run failed: {exc}")
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .plots import plot_all
    from .report import read_mfd, read_report, run_sweep, write_report
    try:
        spec = cfgmod.SweepSpec.from_resolved(cfgmod.load_config(args.spec))
        cfgmod.build_scenario(spec.base)
    except LanesimError as exc:
        _err(exc)
        return EXIT_CONFIG
    failed = run_sweep(spec, args.out, args.jobs)
    for d, err in failed:
        _err(f"run {d} failed: {err}")
    if failed:
        return EXIT_RUNTIME
    try:
        rep, mfd = write_report(args.out)
        plot_all(read_report(rep), read_mfd(mfd), Path(args.out) / "plots")
    except LanesimError as exc:
        _err(exc)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import write_report
    try:
        rep, _ = write_report(args.runs)
    except LanesimError as exc:
        _err(exc)
        return EXIT_CONFIG
    print(rep)
    return EXIT_OK


def cmd_plot(args) -> int:
    from .plots import plot_all
    from .report import MFD_CSV, REPORT_CSV, read_mfd, read_report
    runs = Path(args.runs)
    try:
        rows = read_report(runs / REPORT_CSV)
        mfd = read_mfd(runs / MFD_CSV)
    except LanesimError as exc:
        _err(exc)
        return EXIT_CONFIG
    for p in plot_all(rows, mfd, args.out):
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lanesim", description="Mixed CV/AV urban lane-change simulator")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="execute one run")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("sweep", help="penetration x seed sweep, then report and plots")
    p.add_argument("--spec", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("report", help="recompute report.csv from run directories")
    p.add_argument("--runs", required=True)
    p.set_defaults(func=cmd_report)
    p = sub.add_parser("plot", help="SVG charts from report.csv and mfd.csv")
    p.add_argument("--runs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
