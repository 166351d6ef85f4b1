"""OD matrices, time-of-day profiles and fleet composition."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dynamics import AV, CV, STYLES, DriverProfile, table1_profiles
from .errors import ParseError, ValidationError
from .network import RoadNetwork, boundary_nodes

REAL_SHAPED = "real-shaped"
INFLATED = "inflated"

# typical working-day shape (share of the peak hour); morning peak 8-9,
# afternoon peak 16-18
WEEKDAY_FACTORS = (
    0.10, 0.06, 0.04, 0.04, 0.06, 0.15, 0.40, 0.80, 1.00, 0.75, 0.62, 0.65,
    0.70, 0.68, 0.70, 0.82, 0.95, 0.97, 0.80, 0.58, 0.42, 0.32, 0.24, 0.16,
)


@dataclass(frozen=True)
class ODMatrix:
    entries: dict[tuple[str, str], float]

    def __post_init__(self):
        for (o, d), f in self.entries.items():
            if o == d:
                raise ValidationError(o, f"OD pair with origin == destination ({o!r})")
            if not f >= 0:
                raise ValidationError(f"{o},{d}", f"negative flow for OD pair ({o!r}, {d!r})")

    @property
    def total_flow(self) -> float:
        return float(sum(self.entries.values()))

    def scaled(self, c: float) -> "ODMatrix":
        return ODMatrix({k: v * c for k, v in self.entries.items()})


@dataclass(frozen=True)
class DemandProfile:
    """Piecewise-constant demand multipliers, one per slot of ``slot_s`` seconds.

    A real-shaped profile uses 24 hourly factors; ``slot_s`` below 3600
    compresses the day into a shorter horizon.  Inflated profiles are built
    by :meth:`ramp_profile` and keep their ramp parameters in ``ramp``.
    """

    kind: str
    factors: tuple[float, ...]
    slot_s: float = 3600.0
    ramp: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in (REAL_SHAPED, INFLATED):
            raise ValidationError(self.kind, f"unknown profile kind {self.kind!r}")
        if not self.factors or any(not f >= 0 for f in self.factors):
            raise ValidationError("factors", "profile factors must be nonnegative")
        if not self.slot_s > 0:
            raise ValidationError("slot_s", "slot_s must be positive")
        if self.kind == INFLATED:
            peak = int(np.argmax(self.factors))
            if any(b < a for a, b in zip(self.factors[:peak], self.factors[1:peak + 1])):
                raise ValidationError("factors", "inflated profile must not decrease before its peak")

    @property
    def coverage(self) -> float:
        return len(self.factors) * self.slot_s

    def factor_at(self, t: float) -> float:
        k = min(int(t // self.slot_s), len(self.factors) - 1)
        return self.factors[k]

    def mean_factor(self, t0: float, t1: float) -> float:
        """Time-average of the factor over [t0, t1)."""
        if t1 <= t0:
            return self.factor_at(t0)
        acc = 0.0
        t = t0
        while t < t1 - 1e-9:
            k = min(int(t // self.slot_s), len(self.factors) - 1)
            end = min(t1, (k + 1) * self.slot_s) if k < len(self.factors) - 1 else t1
            acc += self.factors[k] * (end - t)
            t = end
        return acc / (t1 - t0)

    @classmethod
    def real_shaped(cls, scale: float = 1.0, slot_s: float = 3600.0,
                    factors=WEEKDAY_FACTORS) -> "DemandProfile":
        if len(factors) != 24:
            raise ValidationError("factors", "a real-shaped profile needs 24 hourly factors")
        return cls(REAL_SHAPED, tuple(float(f) * scale for f in factors), slot_s)

    @classmethod
    def ramp_profile(cls, start_factor: float, peak_factor: float, ramp_hours: float,
                     hold_hours: float, fall_hours: float = 0.0,
                     slot_s: float = 300.0) -> "DemandProfile":
        """Linear rise from start to peak, hold, then an optional linear fall back to start."""
        if peak_factor < start_factor:
            raise ValidationError("peak_factor", "peak_factor must be >= start_factor")
        total = (ramp_hours + hold_hours + fall_hours) * 3600.0
        n = max(1, int(math.ceil(total / slot_s - 1e-9)))
        r, h = ramp_hours * 3600.0, hold_hours * 3600.0
        out = []
        for k in range(n):
            t = (k + 0.5) * slot_s
            if t < r:
                f = start_factor + (peak_factor - start_factor) * t / r
            elif t < r + h:
                f = peak_factor
            else:
                f = peak_factor - (peak_factor - start_factor) * min(1.0, (t - r - h) / (fall_hours * 3600.0))
            out.append(f)
        spec = {"start_factor": start_factor, "peak_factor": peak_factor, "ramp_hours": ramp_hours,
                "hold_hours": hold_hours, "fall_hours": fall_hours}
        # the fall branch may produce values a hair above earlier ones only by rounding
        peak = int(np.argmax(out))
        out[:peak + 1] = np.maximum.accumulate(out[:peak + 1]).tolist()
        return cls(INFLATED, tuple(out), slot_s, spec)

    @classmethod
    def default_inflated(cls, horizon: float, peak_factor: float = 2.0,
                         slot_s: float = 300.0) -> "DemandProfile":
        """Ramp from 0.5x to ``peak_factor`` over 60% of the horizon, then hold."""
        hours = horizon / 3600.0
        return cls.ramp_profile(0.5, peak_factor, 0.6 * hours, 0.4 * hours, 0.0, slot_s)

    def to_dict(self) -> dict:
        if self.ramp is not None:
            return {"kind": self.kind, **self.ramp, "slot_s": self.slot_s}
        return {"kind": self.kind, "factors": list(self.factors), "slot_s": self.slot_s}

    @classmethod
    def from_dict(cls, d: dict) -> "DemandProfile":
        try:
            kind = d.get("kind", REAL_SHAPED)
            if kind not in (REAL_SHAPED, INFLATED):
                raise ValueError(f"unknown profile kind {kind!r}")
            if "factors" in d:
                return cls(kind, tuple(float(x) for x in d["factors"]), float(d.get("slot_s", 3600.0)))
            if kind == INFLATED and "start_factor" not in d:
                return cls.default_inflated(float(d.get("horizon", 14400.0)),
                                            float(d.get("peak_factor", 2.0)), float(d.get("slot_s", 300.0)))
            if kind == INFLATED:
                return cls.ramp_profile(float(d["start_factor"]), float(d["peak_factor"]),
                                        float(d["ramp_hours"]), float(d["hold_hours"]),
                                        float(d.get("fall_hours", 0.0)), float(d.get("slot_s", 300.0)))
            return cls.real_shaped(float(d.get("scale", 1.0)), float(d.get("slot_s", 3600.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed demand profile: {exc}") from None


@dataclass(frozen=True)
class FleetMix:
    av_penetration: float = 0.0
    style_shares: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)

    def __post_init__(self):
        if not 0.0 <= self.av_penetration <= 1.0:
            raise ValidationError("av_penetration", "penetration must lie in [0, 1]")
        if len(self.style_shares) != len(STYLES) or any(s < 0 for s in self.style_shares):
            raise ValidationError("style_shares", "need three nonnegative style shares")
        if abs(sum(self.style_shares) - 1.0) > 1e-9:
            raise ValidationError("style_shares", "style shares must sum to 1")


@dataclass(frozen=True)
class Departure:
    time: float
    origin: str
    destination: str
    profile: DriverProfile | None = None


def expand_demand(od: ODMatrix, profile: DemandProfile, horizon: float,
                  seed: int) -> list[Departure]:
    """Poisson departures per OD pair and profile slot, uniform within the slot."""
    if horizon > profile.coverage + 1e-9:
        raise ValueError(f"horizon {horizon} s exceeds profile coverage {profile.coverage} s")
    rng = np.random.default_rng(seed)
    n_slots = int(math.ceil(horizon / profile.slot_s - 1e-9))
    out = []
    for (o, d) in sorted(od.entries):
        flow = od.entries[(o, d)]
        for k in range(n_slots):
            t0 = k * profile.slot_s
            dur = min(profile.slot_s, horizon - t0)
            mean = flow * profile.factors[k] * dur / 3600.0
            n = rng.poisson(mean) if mean > 0 else 0
            for t in rng.uniform(t0, t0 + dur, n):
                out.append(Departure(float(t), o, d))
    out.sort(key=lambda x: (x.time, x.origin, x.destination))
    return out


def demand_rate(od: ODMatrix, profile: DemandProfile, t0: float, t1: float) -> float:
    """Expected departures per hour over [t0, t1)."""
    return od.total_flow * profile.mean_factor(t0, t1)


def _style_sequence(n: int, shares) -> list[int]:
    counts = [0] * len(shares)
    seq = []
    for k in range(n):
        deficit = [shares[i] * (k + 1) - counts[i] for i in range(len(shares))]
        # ties go to the earlier style
        i = max(range(len(shares)), key=lambda j: (round(deficit[j], 12), -j))
        counts[i] += 1
        seq.append(i)
    return seq


def assign_fleet(departures: list[Departure], mix: FleetMix, seed: int,
                 profiles: dict | None = None) -> list[Departure]:
    """Give each departure a class and style.

    The AV set is the first ``round(p * n)`` entries of a seeded permutation,
    so for one seed the AV sets are nested as penetration grows.  Styles
    cycle within each class following the target shares.
    """
    profiles = profiles or table1_profiles()
    n = len(departures)
    n_av = int(math.floor(mix.av_penetration * n + 0.5))
    perm = np.random.default_rng(seed).permutation(n)
    is_av = np.zeros(n, dtype=bool)
    is_av[perm[:n_av]] = True
    av_styles = iter(_style_sequence(n_av, mix.style_shares))
    cv_styles = iter(_style_sequence(n - n_av, mix.style_shares))
    out = []
    for i, dep in enumerate(departures):
        cls = AV if is_av[i] else CV
        style = STYLES[next(av_styles) if is_av[i] else next(cv_styles)]
        out.append(replace(dep, profile=profiles[(cls, style)]))
    return out


def uniform_boundary_od(net: RoadNetwork, flow: float) -> ODMatrix:
    """Equal flow between every entry edge and every exit edge on the boundary.

    Entry edges lead from a boundary node into the interior, exit edges the
    other way; pairs starting and ending at the same boundary node are skipped.
    """
    bnd = set(boundary_nodes(net))
    inward = [e for e in net.edge_ids if net.edges[e].from_node in bnd and net.edges[e].to_node not in bnd]
    outward = [e for e in net.edge_ids if net.edges[e].to_node in bnd and net.edges[e].from_node not in bnd]
    if not inward or not outward:
        inward = outward = list(net.edge_ids)
    entries = {}
    for o in inward:
        for d in outward:
            if o != d and net.edges[o].from_node != net.edges[d].to_node:
                entries[(o, d)] = float(flow)
    return ODMatrix(entries)


def load_od(path) -> ODMatrix:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
    except FileNotFoundError:
        raise ParseError(f"OD file not found: {path}") from None
    entries = {}
    for i, r in enumerate(rows):
        try:
            entries[(r["origin"], r["destination"])] = float(r["flow_veh_per_h"])
        except (KeyError, TypeError, ValueError):
            raise ParseError(f"{path}: malformed row {i + 2}") from None
    return ODMatrix(entries)


def save_od(od: ODMatrix, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["origin", "destination", "flow_veh_per_h"])
        for (o, d) in sorted(od.entries):
            w.writerow([o, d, repr(od.entries[(o, d)])])


def load_profile(path) -> DemandProfile:
    path = Path(path)
    try:
        return DemandProfile.from_dict(json.loads(path.read_text()))
    except FileNotFoundError:
        raise ParseError(f"profile file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None


__all__ = ["CV", "AV", "Departure", "DemandProfile", "FleetMix", "ODMatrix", "assign_fleet",
           "demand_rate", "expand_demand", "load_od", "load_profile", "save_od",
           "uniform_boundary_od"]
