"""Sweep execution and report building over run directories."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import config as cfgmod
from .engine import OUTPUT_FILES, RunOutput, run
from .errors import LanesimError, ParseError
from .metrics import RunSummary, build_mfd, scenario_report, summarize_run

log = logging.getLogger(__name__)

CONFIG_JSON = "config.json"
REPORT_CSV = "report.csv"
MFD_CSV = "mfd.csv"


def execute_run(resolved: dict, out_dir) -> RunOutput:
    """Run one fully pinned resolved config and write it to ``out_dir``."""
    scenario = cfgmod.build_scenario(resolved)
    output = run(scenario)
    out = Path(out_dir)
    output.write(out)
    (out / CONFIG_JSON).write_text(cfgmod.dumps(resolved))
    return output


def _sweep_job(args):
    resolved, out_dir = args
    try:
        execute_run(resolved, out_dir)
        return str(out_dir), None
    except Exception as exc:  # reported by the parent, never raised across processes
        return str(out_dir), f"{type(exc).__name__}: {exc}"


def run_sweep(spec: cfgmod.SweepSpec, out_dir, jobs: int = 1) -> list[tuple[str, str]]:
    """Execute every run of ``spec``; returns (run dir, error) for failed runs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(cfgmod.run_config(spec.base, s, p), out / name) for p, s, name in spec.runs()]
    if jobs <= 1:
        results = [_sweep_job(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_job, tasks))
    failed = [(d, err) for d, err in results if err is not None]
    for d, err in failed:
        log.error("run %s failed: %s", d, err)
    return failed


def discover_runs(runs_dir) -> list[Path]:
    root = Path(runs_dir)
    if not root.is_dir():
        raise ParseError(f"runs directory not found: {root}")
    return sorted(p for p in root.iterdir() if p.is_dir() and (p / CONFIG_JSON).exists())


def summarize_dir(run_dir, networks: dict | None = None):
    """(RunSummary, MFD points) recomputed from a saved run directory."""
    d = Path(run_dir)
    try:
        resolved = json.loads((d / CONFIG_JSON).read_text())
        key = json.dumps(resolved["network"], sort_keys=True)
        pen = float(resolved["fleet"]["av_penetration"])
        seed = int(resolved["seed"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{d}: malformed {CONFIG_JSON} ({exc})") from None
    networks = {} if networks is None else networks
    if key not in networks:
        networks[key] = cfgmod.build_network(resolved)
    net = networks[key]
    missing = [f for f in OUTPUT_FILES if not (d / f).exists()]
    if missing:
        raise ParseError(f"{d}: missing {', '.join(missing)}")
    out = RunOutput.read(d)
    rates = out.counters.get("interval_demand_veh_per_h")
    try:
        summary = summarize_run(pen, seed, out.lane_changes, out.trips, out.measures, net, rates)
        points = build_mfd(out.measures, net, rates)
    except (KeyError, LanesimError) as exc:
        raise ParseError(f"{d}: inconsistent run output ({exc})") from None
    return summary, points


def _f(x) -> str:
    return "nan" if isinstance(x, float) and math.isnan(x) else repr(float(x))


def write_report(runs_dir) -> tuple[Path, Path]:
    """Recompute report.csv and mfd.csv from every run directory under ``runs_dir``."""
    root = Path(runs_dir)
    dirs = discover_runs(root)
    if not dirs:
        raise ParseError(f"{root}: no run directories")
    networks: dict = {}
    summaries: list[RunSummary] = []
    mfd_rows = []
    for d in dirs:
        s, pts = summarize_dir(d, networks)
        summaries.append(s)
        for pt in pts:
            mfd_rows.append([f"{s.penetration:.2f}", s.seed, _f(pt.interval_start), _f(pt.k), _f(pt.q),
                             _f(pt.q_length_weighted), pt.phase])
    summaries.sort(key=lambda r: (r.penetration, r.seed))
    rows = scenario_report(summaries)
    rep = root / REPORT_CSV
    with rep.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["penetration", "metric", "mean", "sd", "rel_change_vs_0"])
        for r in rows:
            w.writerow([r.penetration, r.metric, _f(r.mean), _f(r.sd), _f(r.rel_change_vs_0)])
    mfd = root / MFD_CSV
    mfd_rows.sort(key=lambda r: (float(r[0]), r[1], float(r[2])))
    with mfd.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["penetration", "seed", "interval_start", "k_veh_per_km", "q_veh_per_s",
                    "q_veh_per_h_per_lane", "phase"])
        w.writerows(mfd_rows)
    return rep, mfd


def read_report(path) -> list[dict]:
    try:
        with Path(path).open(newline="") as fh:
            return [{**r, "mean": float(r["mean"]), "sd": float(r["sd"]),
                     "rel_change_vs_0": float(r["rel_change_vs_0"])} for r in csv.DictReader(fh)]
    except FileNotFoundError:
        raise ParseError(f"report not found: {path}") from None
    except (KeyError, ValueError) as exc:
        raise ParseError(f"{path}: malformed report ({exc})") from None


def read_mfd(path) -> list[dict]:
    try:
        with Path(path).open(newline="") as fh:
            rows = [{"penetration": float(r["penetration"]), "seed": int(r["seed"]),
                     "k": float(r["k_veh_per_km"]), "q": float(r["q_veh_per_h_per_lane"]),
                     "phase": r["phase"]} for r in csv.DictReader(fh)]
    except FileNotFoundError:
        raise ParseError(f"MFD file not found: {path}") from None
    except (KeyError, ValueError) as exc:
        raise ParseError(f"{path}: malformed MFD file ({exc})") from None
    if not rows:
        raise ParseError(f"{path}: MFD file has no points")
    return rows
