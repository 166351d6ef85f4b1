"""Network-level aggregation: mean space speed, MFD and scenario reports."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .errors import EmptyMfd, EmptyNetworkInterval, MissingBaseline
from .network import RoadNetwork

LOADING, UNLOADING = "loading", "unloading"
LITERAL, LENGTH_WEIGHTED = "literal", "length_weighted"


@dataclass(frozen=True)
class EdgeMeasure:
    """Per-edge aggregate over one interval.

    ``mean_count`` is the time-average of the on-edge vehicle count,
    ``mean_speed`` the vehicle-time weighted mean speed (0 when empty) and
    ``density`` the count per meter of edge.
    """

    interval_start: float
    edge: str
    mean_speed: float
    mean_count: float
    density: float

    @classmethod
    def from_counts(cls, interval_start, edge, mean_speed, mean_count, length):
        return cls(interval_start, edge, mean_speed, mean_count, mean_count / length)


@dataclass(frozen=True)
class MfdPoint:
    interval_start: float
    k: float                 # veh/km
    q: float                 # veh/s, sum of v_i * k_i over edges
    q_length_weighted: float  # veh/h/lane
    phase: str = LOADING

    def flow(self, mode: str = LITERAL) -> float:
        return self.q if mode == LITERAL else self.q_length_weighted


@dataclass(frozen=True)
class CriticalPoint:
    q_max: float
    k_0: float


def mean_space_speed(measures: Iterable[EdgeMeasure]) -> float:
    """Count-weighted mean of edge speeds: sum(v_i N_i) / sum(N_i)."""
    num = den = 0.0
    for m in measures:
        num += m.mean_speed * m.mean_count
        den += m.mean_count
    if den <= 0:
        raise EmptyNetworkInterval("no vehicles on the network in this interval")
    return num / den


def network_density(measures: Iterable[EdgeMeasure], network: RoadNetwork) -> float:
    """sum(N_i) / sum(l_i) over every network edge, in veh/km."""
    n = 0.0
    for m in measures:
        if m.edge not in network.edges:
            raise KeyError(m.edge)
        n += m.mean_count
    return n / network.total_length * 1000.0


def network_flow(measures: Iterable[EdgeMeasure], network: RoadNetwork | None = None,
                 mode: str = LITERAL) -> float:
    """Network flow.

    ``literal`` returns sum(v_i * k_i) in veh/s.  ``length_weighted``
    returns sum(v_i * k_i * l_i) / sum(l_i * lanes_i) in veh/h/lane and
    needs the network.
    """
    ms = list(measures)
    if mode == LITERAL:
        return float(sum(m.mean_speed * m.density for m in ms))
    if network is None:
        raise ValueError("length_weighted flow needs the network")
    lane_len = sum(e.length * e.lane_count for e in network.edges.values())
    vkt = sum(m.mean_speed * m.density * network.edges[m.edge].length for m in ms)
    return vkt / lane_len * 3600.0


def group_by_interval(measures: Iterable[EdgeMeasure]) -> dict[float, list[EdgeMeasure]]:
    out = defaultdict(list)
    for m in measures:
        out[m.interval_start].append(m)
    return dict(sorted(out.items()))


def build_mfd(measures: Iterable[EdgeMeasure], network: RoadNetwork,
              demand_rates: Sequence[float] | None = None) -> list[MfdPoint]:
    """One MFD point per interval.

    ``demand_rates`` (expected departures per hour, one per interval) tag each
    point: loading while the rate does not drop versus the previous interval,
    unloading otherwise.
    """
    groups = group_by_interval(measures)
    points = []
    prev_rate = -math.inf
    unloading = False
    for i, (t, ms) in enumerate(groups.items()):
        if demand_rates is not None and i < len(demand_rates):
            rate = demand_rates[i]
            unloading = rate < prev_rate - 1e-9
            prev_rate = rate
        points.append(MfdPoint(
            t,
            network_density(ms, network),
            network_flow(ms),
            network_flow(ms, network, LENGTH_WEIGHTED),
            UNLOADING if unloading else LOADING,
        ))
    return points


def critical_point(points: Sequence[MfdPoint], mode: str = LITERAL) -> CriticalPoint:
    """Max flow and the density it occurs at; ties go to the lowest density."""
    if not points:
        raise EmptyMfd("no MFD points")
    best = min(points, key=lambda p: (-p.flow(mode), p.k))
    return CriticalPoint(best.flow(mode), best.k)


def relative_change(value: float, baseline: float) -> float:
    """Percent change versus ``baseline``."""
    return (value - baseline) / baseline * 100.0


@dataclass
class TripSummary:
    mean: dict[str, float]
    completed: dict[str, int]
    incomplete: int


def travel_time_summary(trips) -> TripSummary:
    """Mean (arrive - depart) of completed trips, overall and per class.

    ``trips`` are mappings or objects with vehicle_class, depart, arrive and
    completed fields.
    """
    sums: dict[str, float] = defaultdict(float)
    counts: dict[str, int] = defaultdict(int)
    incomplete = 0
    for tr in trips:
        get = tr.get if isinstance(tr, dict) else lambda k, _t=tr: getattr(_t, k)
        if not get("completed"):
            incomplete += 1
            continue
        tt = get("arrive") - get("depart")
        for key in ("all", get("vehicle_class")):
            sums[key] += tt
            counts[key] += 1
    return TripSummary({k: sums[k] / counts[k] for k in sorted(counts)}, dict(sorted(counts.items())),
                       incomplete)


@dataclass(frozen=True)
class RunSummary:
    """Scalar metrics of one run, the unit the scenario report aggregates."""

    penetration: float
    seed: int
    lc_total: int
    lc_av_share: float
    travel_time: float
    travel_time_cv: float
    travel_time_av: float
    mean_speed: float
    q_max: float
    k_0: float

    METRICS = ("lc_total", "lc_av_share", "travel_time", "travel_time_cv", "travel_time_av",
               "mean_speed", "q_max", "k_0")


def summarize_run(penetration, seed, lane_changes, trips, measures, network,
                  demand_rates=None) -> RunSummary:
    lcs = list(lane_changes)
    n_av = sum(1 for r in lcs if (r["class"] if isinstance(r, dict) else r.vehicle_class) == "AV")
    tts = travel_time_summary(trips)
    measures = list(measures)
    try:
        speed = mean_space_speed(measures)
    except EmptyNetworkInterval:
        speed = math.nan
    pts = build_mfd(measures, network, demand_rates)
    cp = critical_point(pts, LENGTH_WEIGHTED) if pts else CriticalPoint(math.nan, math.nan)
    return RunSummary(
        penetration, seed, len(lcs), n_av / len(lcs) if lcs else math.nan,
        tts.mean.get("all", math.nan), tts.mean.get("CV", math.nan), tts.mean.get("AV", math.nan),
        speed, cp.q_max, cp.k_0,
    )


@dataclass(frozen=True)
class ReportRow:
    penetration: str
    metric: str
    mean: float
    sd: float
    rel_change_vs_0: float


def _mean_sd(xs):
    xs = np.asarray([x for x in xs if not math.isnan(x)], dtype=float)
    if xs.size == 0:
        return math.nan, math.nan
    sd = float(xs.std(ddof=1)) if xs.size > 1 else 0.0
    return float(xs.mean()), sd


def scenario_report(runs: Sequence[RunSummary]) -> list[ReportRow]:
    """Mean and sd across seeds per penetration, relative change vs 0%.

    Closes with the Spearman rank correlation of seed-mean q_max against
    penetration as the trend statistic.
    """
    groups = defaultdict(list)
    for r in runs:
        groups[round(r.penetration, 6)].append(r)
    if 0.0 not in groups:
        raise MissingBaseline("no 0% penetration runs")
    base = {m: _mean_sd(getattr(r, m) for r in groups[0.0])[0] for m in RunSummary.METRICS}
    rows = []
    qmax_means = []
    for p in sorted(groups):
        for m in RunSummary.METRICS:
            mean, sd = _mean_sd(getattr(r, m) for r in groups[p])
            b = base[m]
            rel = relative_change(mean, b) if b and not math.isnan(b) and not math.isnan(mean) else math.nan
            rows.append(ReportRow(f"{p:.2f}", m, mean, sd, rel))
            if m == "q_max":
                qmax_means.append(mean)
    pens = sorted(groups)
    if len(pens) > 1 and len(set(qmax_means)) > 1 and not any(map(math.isnan, qmax_means)):
        rho = float(stats.spearmanr(pens, qmax_means).statistic)
    else:
        rho = math.nan
    rows.append(ReportRow("all", "spearman_rho_q_max", rho, math.nan, math.nan))
    return rows
