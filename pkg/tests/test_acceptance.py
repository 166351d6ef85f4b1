"""Acceptance criteria 1-8, each printing one PASS/FAIL line.

The sweeps behind criteria 3 and 5-8 take several minutes; they are driven
through the CLI with the shipped configs in ``configs/``.
"""

import filecmp
import json
import math
import os
import time
from collections import defaultdict
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from lanesim import config as cfgmod
from lanesim.cli import EXIT_OK, main
from lanesim.dynamics import TABLE1, CarFollowingParams, LaneChangeParams, gap_check, required_gap, secure_gap
from lanesim.engine import OUTPUT_FILES, run
from lanesim.metrics import LENGTH_WEIGHTED, mean_space_speed, network_density, network_flow
from lanesim.report import MFD_CSV, REPORT_CSV, read_mfd, read_report, summarize_dir
from test_dynamics import LADDER, _ego, _situations
from test_metrics import FIXTURES, _brute, _close

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
JOBS = os.cpu_count() or 1


def _verdict(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def _sweep(cfg, out, jobs=JOBS):
    t0 = time.perf_counter()
    code = main(["sweep", "--spec", str(cfg), "--jobs", str(jobs), "--out", str(out)])
    assert code == EXIT_OK
    return time.perf_counter() - t0


def _runs(out):
    nets = {}
    return {(s.penetration, s.seed): (s, pts, json.loads((d / "counters.json").read_text()))
            for d in sorted(p for p in Path(out).iterdir() if (p / "config.json").exists())
            for s, pts in [summarize_dir(d, nets)]}


@pytest.fixture(scope="module")
def inflated(tmp_path_factory):
    out = tmp_path_factory.mktemp("inflated")
    elapsed = _sweep(CONFIGS / "inflated.json", out)
    return out, elapsed, _runs(out)


@pytest.fixture(scope="module")
def real_shaped(tmp_path_factory):
    out = tmp_path_factory.mktemp("real")
    _sweep(CONFIGS / "real_shaped.json", out)
    return out, _runs(out)


def test_criterion_1_formula_oracles(capsys):
    t0 = time.perf_counter()
    bad = 0
    for net, ms in FIXTURES:
        speed, k, q, _ = _brute(net, ms)
        if speed is not None and not _close(mean_space_speed(ms), speed):
            bad += 1
        bad += not _close(network_density(ms, net), k)
        bad += not _close(network_flow(ms), q)
    dt = time.perf_counter() - t0
    _verdict(capsys, 1, bad == 0 and len(FIXTURES) >= 20 and dt < 1.0,
             f"{len(FIXTURES)} fixtures, {bad} mismatches at 1e-9 rel, {dt:.3f} s")


def test_criterion_2_gap_acceptance(capsys):
    t0 = time.perf_counter()
    cf = CarFollowingParams()
    gaps = [required_gap(12.0, 4.0, cf, a) for a in LADDER]
    decreasing = all(x < y for x, y in zip(gaps, gaps[1:]))
    acc = {a: np.zeros(10_000, bool) for a in LADDER}
    for k, (v, lead, foll) in enumerate(_situations(10_000, 2024)):
        ego = _ego(speed=v)
        for a in LADDER:
            acc[a][k] = gap_check(ego, lead, foll, LaneChangeParams(lc_assertive=a), cf)
    violations = sum(int(np.sum(acc[lo] & ~acc[hi])) for hi, lo in zip(LADDER, LADDER[1:]))
    violations += sum(int(np.sum(acc[TABLE1["AV"][s][3]] & ~acc[TABLE1["CV"][s][3]]))
                      for s in ("conservative", "moderate", "aggressive"))
    share = 13.89 * cf.reaction_time / secure_gap(13.89, 0.0, cf)
    dt = time.perf_counter() - t0
    _verdict(capsys, 2, decreasing and violations == 0 and share >= 0.35 and dt < 10.0,
             f"strictly decreasing={decreasing}, nesting violations={violations}, "
             f"tau share={share:.3f}, {dt:.2f} s")


def test_criterion_3_safety_and_conservation(inflated, capsys):
    _, _, runs = inflated
    viol = defaultdict(int)
    removed, inserted = defaultdict(int), defaultdict(int)
    for (p, _), (_, _, c) in runs.items():
        for k in ("ordering_violations", "red_light_crossings", "conservation_violations"):
            viol[k] += c[k]
        viol["identity"] += c["inserted"] != c["arrived"] + c["active_at_end"] + c["removed_stuck"]
        removed[p] += c["removed_stuck"]
        inserted[p] += c["inserted"]
    share = {p: removed[p] / inserted[p] for p in sorted(inserted)}
    worst = max(share, key=share.get)
    ok = sum(viol.values()) == 0 and share[worst] < 0.01
    per = " ".join(f"{p:.1f}:{100 * s:.2f}%" for p, s in share.items())
    _verdict(capsys, 3, ok, f"{len(runs)} runs, {dict(viol)}; removed-stuck per penetration "
             f"(10 seeds pooled) {per}; worst {100 * share[worst]:.2f}% at p={worst:.1f}")


def test_criterion_4_determinism(tmp_path, capsys):
    resolved = cfgmod.run_config(cfgmod.load_config(CONFIGS / "quick.json"), 7, 0.5)
    for name in ("a", "b"):
        run(cfgmod.build_scenario(resolved)).write(tmp_path / name)
    same_run = all(filecmp.cmp(tmp_path / "a" / f, tmp_path / "b" / f, shallow=False) for f in OUTPUT_FILES)
    _sweep(CONFIGS / "quick.json", tmp_path / "j1", jobs=1)
    _sweep(CONFIGS / "quick.json", tmp_path / "j8", jobs=8)
    same_sweep = all(filecmp.cmp(tmp_path / "j1" / f, tmp_path / "j8" / f, shallow=False)
                     for f in (REPORT_CSV, MFD_CSV))
    _verdict(capsys, 4, same_run and same_sweep,
             f"run byte-identical={same_run}, sweep report jobs 1 vs 8 identical={same_sweep}")


def test_criterion_5_lane_changes(real_shaped, capsys):
    _, runs = real_shaped
    by_p = defaultdict(list)
    for (p, _), (s, _, _) in runs.items():
        by_p[p].append(s)
    lc = {p: np.mean([s.lc_total for s in v]) for p, v in by_p.items()}
    share = {p: np.mean([s.lc_av_share for s in v]) for p, v in by_p.items()}
    reduction = 1 - lc[1.0] / lc[0.0]
    diag = all(share[p] <= p + 1e-12 for p in share)
    ends = share[0.0] == 0.0 and share[1.0] == 1.0
    n_seeds = min(len(v) for v in by_p.values())
    _verdict(capsys, 5, reduction >= 0.10 and diag and ends and n_seeds >= 10,
             f"mean LC {lc[0.0]:.0f} -> {lc[1.0]:.0f} ({100 * reduction:.1f}% fewer), "
             f"AV share {', '.join(f'{p:.1f}:{share[p]:.3f}' for p in sorted(share))}")


def test_criterion_6_efficiency(real_shaped, capsys):
    _, runs = real_shaped
    seeds = sorted({s for p, s in runs if p == 0.0})
    base = {s: runs[(0.0, s)][0] for s in seeds}
    full = {s: runs[(1.0, s)][0] for s in seeds}
    tt_signs = sum(full[s].travel_time >= base[s].travel_time for s in seeds)
    v_signs = sum(full[s].mean_speed <= base[s].mean_speed for s in seeds)
    tt0, tt1 = np.mean([base[s].travel_time for s in seeds]), np.mean([full[s].travel_time for s in seeds])
    v0, v1 = np.mean([base[s].mean_speed for s in seeds]), np.mean([full[s].mean_speed for s in seeds])
    mixed = sorted({p for p, _ in runs if 0 < p < 1})
    class_ok = []
    for p in mixed:
        av = np.mean([runs[(p, s)][0].travel_time_av for s in seeds])
        cv = np.mean([runs[(p, s)][0].travel_time_cv for s in seeds])
        class_ok.append((p, av, cv))
    ok = (tt1 >= tt0 and v1 <= v0 and tt_signs >= 8 and v_signs >= 8
          and all(av >= cv for _, av, cv in class_ok))
    _verdict(capsys, 6, ok,
             f"travel time {tt0:.2f} -> {tt1:.2f} s ({tt_signs}/10 seeds), speed {v0:.3f} -> {v1:.3f} m/s "
             f"({v_signs}/10 seeds), AV vs CV travel time "
             + ", ".join(f"p={p:.1f}: {av:.2f} vs {cv:.2f}" for p, av, cv in class_ok))


def test_criterion_7_capacity(inflated, capsys):
    out, _, runs = inflated
    by_p = defaultdict(dict)
    for (p, s), (summary, pts, _) in runs.items():
        q = [pt.flow(LENGTH_WEIGHTED) for pt in pts]
        i = int(np.argmax(q))
        by_p[p][s] = (summary.q_max, 0 < i < len(q) - 1)
    pens = sorted(by_p)
    means = [np.mean([v[0] for v in by_p[p].values()]) for p in pens]
    rho = float(stats.spearmanr(pens, means).statistic)
    interior = {p: sum(v[1] for v in by_p[p].values()) for p in pens}
    reported = [r for r in read_report(out / REPORT_CSV) if r["metric"] == "spearman_rho_q_max"][0]["mean"]
    ok = rho < 0 and all(n >= 8 for n in interior.values()) and len(pens) == 11 and math.isclose(rho, reported)
    _verdict(capsys, 7, ok, f"spearman rho={rho:.3f}; q_max {means[0]:.1f} (0%) -> {means[-1]:.1f} (100%); "
             f"interior peaks per penetration {[interior[p] for p in pens]}")


def test_criterion_8_performance(inflated, capsys):
    _, elapsed, runs = inflated
    per_run = elapsed * JOBS / len(runs)
    rounds = math.ceil(len(runs) / 8)
    projected = per_run * rounds
    _verdict(capsys, 8, len(runs) == 110 and projected < 900.0,
             f"{len(runs)} runs in {elapsed:.0f} s on {JOBS} core(s) = {per_run:.2f} s/run; "
             f"projected on 8 cores: {rounds} rounds x {per_run:.2f} s = {projected:.0f} s (limit 900 s)")


def test_mfd_file_matches_runs(inflated):
    out, _, runs = inflated
    rows = read_mfd(out / MFD_CSV)
    assert len(rows) == sum(len(pts) for _, pts, _ in runs.values())
