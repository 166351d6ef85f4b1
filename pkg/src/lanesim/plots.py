"""Static SVG charts drawn from report.csv and mfd.csv."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "lanesim"

PHASE_COLORS = {"loading": "tab:blue", "unloading": "tab:orange"}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _series(rows, metric, field="mean"):
    pts = sorted((float(r["penetration"]), r[field]) for r in rows
                 if r["metric"] == metric and r["penetration"] != "all")
    return [p * 100 for p, _ in pts], [v for _, v in pts]


def plot_all(report_rows: list[dict], mfd_rows: list[dict], out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    x, y = _series(report_rows, "lc_total", "rel_change_vs_0")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(x, y, width=6)
    ax.axhline(0, color="black", lw=0.8)
    ax.set_xlabel("AV penetration [%]")
    ax.set_ylabel("lane changes, change vs 0% [%]")
    paths.append(out / "lane_changes_relative.svg")
    _save(fig, paths[-1])

    x, y = _series(report_rows, "lc_av_share")
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot([0, 100], [0, 100], "k--", lw=0.8, label="penetration")
    ax.plot(x, [v * 100 for v in y], "o-", label="AV share of lane changes")
    ax.set_xlim(0, 100)
    ax.set_ylim(0, 100)
    ax.set_xlabel("AV penetration [%]")
    ax.set_ylabel("share [%]")
    ax.legend()
    paths.append(out / "lane_change_av_share.svg")
    _save(fig, paths[-1])

    fig, ax = plt.subplots(figsize=(6, 4))
    for metric, label in (("travel_time", "travel time"), ("mean_speed", "mean space speed")):
        x, y = _series(report_rows, metric, "rel_change_vs_0")
        ax.plot(x, y, "o-", label=label)
    ax.axhline(0, color="black", lw=0.8)
    ax.set_xlabel("AV penetration [%]")
    ax.set_ylabel("change vs 0% [%]")
    ax.legend()
    paths.append(out / "efficiency_relative.svg")
    _save(fig, paths[-1])

    pens = sorted({r["penetration"] for r in mfd_rows})
    target = min(pens, key=lambda p: (abs(p - 0.5), p))
    fig, ax = plt.subplots(figsize=(6, 4))
    for phase, color in PHASE_COLORS.items():
        sel = [r for r in mfd_rows if r["penetration"] == target and r["phase"] == phase]
        if sel:
            ax.scatter([r["k"] for r in sel], [r["q"] for r in sel], s=12, color=color, label=phase)
    ax.set_xlabel("density K [veh/km]")
    ax.set_ylabel("flow Q [veh/h/lane]")
    ax.set_title(f"MFD, {target * 100:.0f}% AV")
    ax.legend()
    paths.append(out / "mfd.svg")
    _save(fig, paths[-1])
    return paths
