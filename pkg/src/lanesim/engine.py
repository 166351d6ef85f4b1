"""Simulation driver: builds the array state, runs the compiled step kernel in
one-minute chunks and turns the result into a :class:`RunOutput`."""

from __future__ import annotations

import csv
import json
import logging
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import _kernel as K
from .demand import DemandProfile, Departure, FleetMix, ODMatrix, assign_fleet, demand_rate, expand_demand
from .dynamics import (PROFILE_SETS, VEHICLE_LENGTH, CarFollowingParams, DesireConstants,
                       DriverProfile, LaneChangeReason)
from .errors import ConfigError, ParseError
from .metrics import EdgeMeasure
from .network import SIGNALIZED, RoadNetwork
from .routing import astar_fastest, free_flow_weights, weights_from_measures

log = logging.getLogger(__name__)

LANE_CHANGES_CSV = "lane_changes.csv"
EDGES_CSV = "edges.csv"
TRIPS_CSV = "trips.csv"
COUNTERS_JSON = "counters.json"
OUTPUT_FILES = (LANE_CHANGES_CSV, EDGES_CSV, TRIPS_CSV, COUNTERS_JSON)


def _is_multiple(x, step):
    r = x / step
    return abs(r - round(r)) < 1e-9


@dataclass(frozen=True)
class EngineParams:
    time_step: float = 0.5
    lc_duration: float = 2.0
    teleport_timeout: float = 300.0
    measure_interval: float = 900.0
    lc_cooldown: float = 5.0
    courtesy_factor: float = 0.5
    insertion_speed_factor: float = 0.5
    stuck_speed: float = 0.1
    route_refresh: float = 60.0
    route_window: float = 300.0
    profile_set: str = "table1"
    cf: CarFollowingParams = field(default_factory=CarFollowingParams)
    desire: DesireConstants = field(default_factory=DesireConstants)

    def __post_init__(self):
        dt = self.time_step
        if not dt > 0:
            raise ConfigError("time_step must be positive")
        for name in ("lc_duration", "measure_interval", "route_refresh"):
            v = getattr(self, name)
            if not v > 0 or not _is_multiple(v, dt):
                raise ConfigError(f"{name} must be a positive multiple of time_step")
        if not self.teleport_timeout > 0:
            raise ConfigError("teleport_timeout must be positive")
        if self.lc_cooldown < 0 or not 0 <= self.courtesy_factor <= 1:
            raise ConfigError("lc_cooldown must be >= 0 and courtesy_factor in [0, 1]")
        if not 0 < self.insertion_speed_factor <= 1:
            raise ConfigError("insertion_speed_factor must lie in (0, 1]")
        if self.profile_set not in PROFILE_SETS:
            raise ConfigError(f"unknown profile set {self.profile_set!r}")

    def profiles(self) -> dict[tuple[str, str], DriverProfile]:
        return PROFILE_SETS[self.profile_set](self.cf)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EngineParams":
        d = dict(d)
        try:
            if "cf" in d:
                d["cf"] = CarFollowingParams(**d["cf"])
            if "desire" in d:
                d["desire"] = DesireConstants(**d["desire"])
            return cls(**d)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"engine section: {exc}") from None


@dataclass(frozen=True)
class ScenarioConfig:
    network: RoadNetwork
    od: ODMatrix
    profile: DemandProfile
    fleet: FleetMix = field(default_factory=FleetMix)
    horizon: float = 3600.0
    seed: int = 0
    engine: EngineParams = field(default_factory=EngineParams)

    def __post_init__(self):
        if not self.horizon > 0:
            raise ConfigError("horizon must be positive")
        if self.horizon > self.profile.coverage + 1e-9:
            raise ConfigError(f"horizon {self.horizon} s exceeds the demand profile ({self.profile.coverage} s)")
        for (o, d) in self.od.entries:
            for e in (o, d):
                if e not in self.network.edges:
                    raise ConfigError(f"OD pair references unknown edge {e!r}")

    def seeds(self) -> tuple[int, int, int]:
        """Independent child seeds for demand, fleet and engine randomness."""
        ss = np.random.SeedSequence(self.seed).spawn(3)
        return tuple(int(s.generate_state(1, np.uint64)[0]) for s in ss)

    def departures(self) -> list[Departure]:
        s_dem, s_fleet, _ = self.seeds()
        deps = expand_demand(self.od, self.profile, self.horizon, s_dem)
        return assign_fleet(deps, self.fleet, s_fleet, self.engine.profiles())

    def interval_starts(self) -> list[float]:
        mi = self.engine.measure_interval
        return [i * mi for i in range(int(math.ceil(self.horizon / mi - 1e-9)))]

    def interval_demand(self) -> list[float]:
        mi = self.engine.measure_interval
        return [demand_rate(self.od, self.profile, t, min(t + mi, self.horizon)) for t in self.interval_starts()]


# ---------------------------------------------------------------------------
# output records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LaneChangeRecord:
    time: float
    vehicle: int
    vehicle_class: str
    style: str
    edge: str
    from_lane: int
    to_lane: int
    reason: LaneChangeReason


@dataclass(frozen=True)
class TripRecord:
    vehicle: int
    vehicle_class: str
    style: str
    depart: float
    arrive: float | None
    completed: bool

    @property
    def travel_time(self) -> float | None:
        return self.arrive - self.depart if self.completed else None


def _fmt(x) -> str:
    return repr(float(x))


@dataclass
class RunOutput:
    lane_changes: list[LaneChangeRecord]
    measures: list[EdgeMeasure]
    trips: list[TripRecord]
    counters: dict

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with (out / LANE_CHANGES_CSV).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time", "vehicle", "class", "style", "edge", "from_lane", "to_lane", "reason"])
            for r in self.lane_changes:
                w.writerow([_fmt(r.time), r.vehicle, r.vehicle_class, r.style, r.edge, r.from_lane,
                            r.to_lane, r.reason.label])
        with (out / EDGES_CSV).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["interval_start", "edge", "mean_speed_mps", "mean_count", "density_veh_per_m"])
            for m in self.measures:
                w.writerow([_fmt(m.interval_start), m.edge, _fmt(m.mean_speed), _fmt(m.mean_count),
                            _fmt(m.density)])
        with (out / TRIPS_CSV).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["vehicle", "class", "style", "depart", "arrive", "travel_time_s", "completed"])
            for t in self.trips:
                w.writerow([t.vehicle, t.vehicle_class, t.style, _fmt(t.depart),
                            _fmt(t.arrive) if t.completed else "",
                            _fmt(t.travel_time) if t.completed else "", int(t.completed)])
        (out / COUNTERS_JSON).write_text(json.dumps(self.counters, indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, run_dir) -> "RunOutput":
        d = Path(run_dir)
        reasons = {r.label: r for r in LaneChangeReason}
        try:
            with (d / LANE_CHANGES_CSV).open(newline="") as fh:
                lcs = [LaneChangeRecord(float(r["time"]), int(r["vehicle"]), r["class"], r["style"],
                                        r["edge"], int(r["from_lane"]), int(r["to_lane"]),
                                        reasons[r["reason"]])
                       for r in csv.DictReader(fh)]
            with (d / EDGES_CSV).open(newline="") as fh:
                ms = [EdgeMeasure(float(r["interval_start"]), r["edge"], float(r["mean_speed_mps"]),
                                  float(r["mean_count"]), float(r["density_veh_per_m"]))
                      for r in csv.DictReader(fh)]
            with (d / TRIPS_CSV).open(newline="") as fh:
                trips = []
                for r in csv.DictReader(fh):
                    done = r["completed"] == "1"
                    trips.append(TripRecord(int(r["vehicle"]), r["class"], r["style"], float(r["depart"]),
                                            float(r["arrive"]) if done else None, done))
            counters = json.loads((d / COUNTERS_JSON).read_text())
        except FileNotFoundError as exc:
            raise ParseError(f"{d}: missing {Path(exc.filename).name}") from None
        except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
            raise ParseError(f"{d}: malformed run output ({exc})") from None
        return cls(lcs, ms, trips, counters)


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VehicleView:
    id: int
    state: str
    edge: str | None
    lane: int
    target_lane: int | None
    position: float
    speed: float
    route: tuple[str, ...]
    route_index: int


_STATE_NAMES = {K.PENDING: "pending", K.ACTIVE: "active", K.ARRIVED: "arrived", K.REMOVED: "removed"}


class Simulation:
    """Mutable world state plus the stepping loop.

    Vehicle ids are indices into ``departures`` (sorted by time); vehicles
    added with :meth:`add_vehicle` get the following ids.  ``routes`` maps a
    vehicle id to a fixed route; other vehicles are routed at departure with
    the current travel-time weights.
    """

    def __init__(self, network: RoadNetwork, departures: list[Departure] = (),
                 params: EngineParams | None = None, seed: int = 0,
                 routes: dict[int, list[str]] | None = None, extra_capacity: int = 16):
        self.net = network
        self.params = params or EngineParams()
        self.departures = list(departures)
        self._fixed_routes = dict(routes or {})
        self._rng = np.random.default_rng(seed)
        self._profiles = self.params.profiles()
        self._build_network_arrays()
        self._n_dep = len(self.departures)
        self._n = self._n_dep
        self._alloc_vehicles(self._n_dep + extra_capacity)
        self._build_queues()
        self.k = 0
        self.weights = free_flow_weights(network)
        self._route_cache: dict[tuple[str, str], list[str]] = {}
        self._minute_measures: deque[list[EdgeMeasure]] = deque()
        self._routed = 0
        self._rand = np.zeros(0)
        self._rand_ptr = 0
        self.lane_change_rows: list[np.ndarray] = []
        self.lane_change_times: list[np.ndarray] = []
        self.measures: list[EdgeMeasure] = []
        self._interval_start_k = 0

    # -- setup -------------------------------------------------------------

    def _build_network_arrays(self):
        net = self.net
        ids = net.edge_ids
        self.edge_ids = ids
        self.eidx = {e: i for i, e in enumerate(ids)}
        E = len(ids)
        self.ML = ML = max(e.lane_count for e in net.edges.values())
        self.e_len = np.array([net.edges[e].length for e in ids])
        self.e_vmax = np.array([net.edges[e].speed_limit for e in ids])
        self.e_nl = np.array([net.edges[e].lane_count for e in ids], dtype=np.int64)
        self.perm = np.zeros((E, ML, E), dtype=np.int8)
        self.entry = np.full((E, ML, E), -1, dtype=np.int8)
        for i, eid in enumerate(ids):
            edge = net.edges[eid]
            for lane in range(edge.lane_count):
                for out in net.successors(eid):
                    if edge.permits(lane, out):
                        j = self.eidx[out]
                        self.perm[i, lane, j] = 1
                        self.entry[i, lane, j] = net.entry_lane(eid, lane, out)
        max_phases = 1
        for n in net.nodes.values():
            if n.control == SIGNALIZED and n.signal is not None:
                max_phases = max(max_phases, len(n.signal.phases))
        self.sig_cycle = np.zeros(E)
        self.sig_win = np.zeros((E, max_phases, 3))
        self.sig_nwin = np.zeros(E, dtype=np.int64)
        for i, eid in enumerate(ids):
            node = net.nodes[net.edges[eid].to_node]
            if node.control != SIGNALIZED or node.signal is None:
                continue
            plan = node.signal
            wins = plan.windows(eid)
            self.sig_cycle[i] = plan.cycle
            self.sig_nwin[i] = len(wins)
            for w, win in enumerate(wins):
                self.sig_win[i, w] = win
        inc = [[self.eidx[u] for u in net.incoming[net.edges[e].from_node]] for e in ids]
        self.in_ptr = np.zeros(E + 1, dtype=np.int64)
        self.in_ptr[1:] = np.cumsum([len(x) for x in inc])
        self.in_list = np.array([u for x in inc for u in x], dtype=np.int64)
        self.cap = int(self.e_len.max() / VEHICLE_LENGTH) + 4
        self.lane_veh = np.full((E * ML, self.cap), -1, dtype=np.int64)
        self.lane_cnt = np.zeros(E * ML, dtype=np.int64)
        p = self.params
        cf = p.cf
        P = np.zeros(K.NP)
        P[K.P_DT] = p.time_step
        P[K.P_TAU] = cf.reaction_time
        P[K.P_ACC] = cf.max_accel
        P[K.P_DEC] = cf.max_decel
        P[K.P_MINGAP] = cf.min_gap
        P[K.P_SIGMA] = cf.imperfection
        P[K.P_LCDUR] = p.lc_duration
        P[K.P_COOLDOWN] = p.lc_cooldown
        P[K.P_TIMEOUT] = p.teleport_timeout
        P[K.P_GAINTHR] = p.desire.speed_gain_threshold
        P[K.P_KEEPTHR] = p.desire.keep_right_threshold
        P[K.P_STRATT] = p.desire.strategic_time
        P[K.P_STRATD] = p.desire.strategic_distance
        P[K.P_LOOK] = p.desire.lookahead
        P[K.P_COURT] = p.courtesy_factor
        P[K.P_VLEN] = VEHICLE_LENGTH
        P[K.P_INSF] = p.insertion_speed_factor
        P[K.P_STUCKV] = p.stuck_speed
        self.P = P
        self.cnt = np.zeros(K.NC, dtype=np.int64)
        self.fcnt = np.full(K.NFC, np.inf)
        self.m_cnt = np.zeros(E)
        self.m_spd = np.zeros(E)
        self.r_cnt = np.zeros(E)
        self.r_spd = np.zeros(E)
        self.sig = np.zeros(E, dtype=np.int64)
        nl = E * ML
        self.appr_key = np.zeros(nl, dtype=np.int64)
        self.appr_d = np.zeros(nl)
        self.appr_v = np.zeros(nl, dtype=np.int64)

    def _alloc_vehicles(self, n):
        self.vf = np.zeros((n, K.NVF))
        self.vi = np.zeros((n, K.NVI), dtype=np.int64)
        self.vi[:, K.TGT] = -1
        self.vi[:, K.COOP] = -1
        self.vi[:, K.EDGE] = -1
        self.vf[:, K.DEP] = np.inf
        self.vf[:, K.ARR] = np.nan
        self.vf[:, K.INS] = np.nan
        self.route = np.zeros(max(16, n * 4), dtype=np.int64)
        self._route_len = 0
        self.vprofile: list[DriverProfile | None] = [None] * n
        for i, dep in enumerate(self.departures):
            self.vf[i, K.DEP] = dep.time
            self._set_profile(i, dep.profile or self._profiles[("CV", "moderate")])
        self.tmp_vs = np.zeros(n)
        self.tmp_cap = np.zeros(n)
        self.tmp_new = np.zeros(n)
        self.prop = np.zeros((n, 5), dtype=np.int64)
        self.trans_v = np.zeros(n, dtype=np.int64)
        self.trans_x = np.zeros(n)
        self.blk = np.full(n, -1, dtype=np.int64)
        self.blk_tgt = np.zeros(n, dtype=np.int64)
        self._rec_t = np.zeros(0)
        self._rec_i = np.zeros((0, 5), dtype=np.int64)

    def _set_profile(self, i, prof: DriverProfile):
        self.vprofile[i] = prof
        lc = prof.lc
        self.vf[i, K.LCS] = lc.lc_strategic
        self.vf[i, K.LCG] = lc.lc_speed_gain
        self.vf[i, K.LCK] = lc.lc_keep_right
        self.vf[i, K.LCA] = lc.lc_assertive
        self.vi[i, K.CLS] = 1 if prof.vehicle_class == "AV" else 0

    def _build_queues(self):
        by_origin: dict[int, list[int]] = {}
        for i, dep in enumerate(self.departures):
            if dep.origin not in self.eidx:
                raise ConfigError(f"departure {i} starts on unknown edge {dep.origin!r}")
            by_origin.setdefault(self.eidx[dep.origin], []).append(i)
        self.origins = np.array(sorted(by_origin), dtype=np.int64)
        self.q_ptr = np.zeros(len(self.origins) + 1, dtype=np.int64)
        self.q_ptr[1:] = np.cumsum([len(by_origin[o]) for o in self.origins])
        self.q_list = np.array([i for o in self.origins for i in by_origin[o]], dtype=np.int64)
        self.q_head = self.q_ptr[:-1].copy()

    def _set_route(self, i, route: list[str]):
        n = len(route)
        if self._route_len + n > self.route.shape[0]:
            grown = np.zeros(max(2 * self.route.shape[0], self._route_len + n), dtype=np.int64)
            grown[:self._route_len] = self.route[:self._route_len]
            self.route = grown
        self.route[self._route_len:self._route_len + n] = [self.eidx[e] for e in route]
        self.vi[i, K.RSTART] = self._route_len
        self.vi[i, K.RLEN] = n
        self._route_len += n

    # -- public helpers ----------------------------------------------------

    @property
    def time(self) -> float:
        return self.k * self.params.time_step

    @property
    def counters(self) -> dict:
        c = self.cnt
        return {
            "inserted": int(c[K.C_INSERTED]), "arrived": int(c[K.C_ARRIVED]),
            "removed_stuck": int(c[K.C_REMOVED]), "insertion_denied": int(c[K.C_DENIED]),
            "active_at_end": int(c[K.C_ACTIVE]),
            "pending_at_end": int(np.sum(self.vi[:self._n, K.STATE] == K.PENDING)),
            "lane_changes": int(c[K.C_LC]), "ordering_violations": int(c[K.C_ORDER]),
            "red_light_crossings": int(c[K.C_RED]), "conservation_violations": int(c[K.C_CONS]),
            "buffer_overflows": int(c[K.C_OVERFLOW]), "deadlock_swaps": int(c[K.C_SWAP]), "steps": int(c[K.C_STEPS]),
            "min_lane_gap_m": float(self.fcnt[K.F_MINGAP]) if np.isfinite(self.fcnt[K.F_MINGAP]) else None,
        }

    def add_vehicle(self, profile: DriverProfile, route: list[str], lane: int = 0,
                    position: float = 0.0, speed: float = 0.0) -> int:
        """Place an active vehicle directly on ``route[0]`` (test fixtures)."""
        i = self._n
        if i >= self.vf.shape[0]:
            raise RuntimeError("no spare vehicle capacity; raise extra_capacity")
        self._n += 1
        e = self.eidx[route[0]]
        if not 0 <= lane < self.e_nl[e]:
            raise ValueError(f"lane {lane} out of range on {route[0]}")
        self._set_profile(i, profile)
        self._set_route(i, route)
        self.vi[i, K.STATE] = K.ACTIVE
        self.vi[i, K.EDGE] = e
        self.vi[i, K.LANE] = lane
        self.vf[i, K.POS] = position
        self.vf[i, K.SPD] = speed
        self.vf[i, K.INS] = self.time
        K._lane_insert(self.lane_veh, self.lane_cnt, e * self.ML + lane, i, self.vf, self.cnt)
        self.cnt[K.C_INSERTED] += 1
        self.cnt[K.C_ACTIVE] += 1
        self.cnt[K.C_HI] = max(self.cnt[K.C_HI], i + 1)
        return i

    def vehicle(self, i: int) -> VehicleView:
        vi, vf = self.vi[i], self.vf[i]
        rs, rl = vi[K.RSTART], vi[K.RLEN]
        route = tuple(self.edge_ids[j] for j in self.route[rs:rs + rl])
        return VehicleView(i, _STATE_NAMES[int(vi[K.STATE])],
                           self.edge_ids[vi[K.EDGE]] if vi[K.EDGE] >= 0 else None,
                           int(vi[K.LANE]), int(vi[K.TGT]) if vi[K.TGT] >= 0 else None,
                           float(vf[K.POS]), float(vf[K.SPD]), route, int(vi[K.RIDX]))

    def lane_vehicles(self, edge: str, lane: int) -> list[int]:
        li = self.eidx[edge] * self.ML + lane
        return [int(v) for v in self.lane_veh[li, :self.lane_cnt[li]]]

    def signal_state(self, edge: str, t: float | None = None) -> str:
        node = self.net.nodes[self.net.edges[edge].to_node]
        if node.control != SIGNALIZED:
            return "green"
        return node.signal.state(edge, self.time if t is None else t)

    # -- stepping ----------------------------------------------------------

    def _route_for(self, i: int) -> list[str]:
        if i in self._fixed_routes:
            return self._fixed_routes[i]
        dep = self.departures[i]
        key = (dep.origin, dep.destination)
        r = self._route_cache.get(key)
        if r is None:
            r = self._route_cache[key] = astar_fastest(self.net, self.weights, *key)
        return r

    def _route_due(self, t_until: float):
        while self._routed < self._n_dep and self.vf[self._routed, K.DEP] <= t_until + 1e-9:
            self._set_route(self._routed, self._route_for(self._routed))
            self._routed += 1

    def _refresh_weights(self):
        steps = self.cnt[K.C_RSTEPS]
        if steps > 0:
            t0 = self.time - steps * self.params.time_step
            batch = []
            for j, eid in enumerate(self.edge_ids):
                c = self.r_cnt[j]
                batch.append(EdgeMeasure.from_counts(t0, eid, self.r_spd[j] / c if c > 0 else 0.0,
                                                     c / steps, self.e_len[j]))
            self._minute_measures.append(batch)
            span = self.params.route_window / self.params.route_refresh
            while len(self._minute_measures) > span + 1e-9:
                self._minute_measures.popleft()
        self.r_cnt[:] = 0.0
        self.r_spd[:] = 0.0
        self.cnt[K.C_RSTEPS] = 0
        self.weights = weights_from_measures(self.net, (m for b in self._minute_measures for m in b))
        self._route_cache.clear()

    def _flush_measures(self):
        steps = self.cnt[K.C_MSTEPS]
        if steps == 0:
            return
        t0 = self._interval_start_k * self.params.time_step
        for j, eid in enumerate(self.edge_ids):
            c = self.m_cnt[j]
            self.measures.append(EdgeMeasure.from_counts(t0, eid, self.m_spd[j] / c if c > 0 else 0.0,
                                                         c / steps, self.e_len[j]))
        self.m_cnt[:] = 0.0
        self.m_spd[:] = 0.0
        self.cnt[K.C_MSTEPS] = 0
        self._interval_start_k = self.k

    def _ensure_buffers(self, n_steps: int, t_until: float):
        lo = self.cnt[K.C_LO]
        due = int(np.searchsorted(self.vf[:self._n_dep, K.DEP], t_until + 1e-9, side="right"))
        bound = int(np.sum(self.vi[lo:max(due, self.cnt[K.C_HI]), K.STATE] <= K.ACTIVE))
        need = n_steps * max(bound, 1)
        left = self._rand.shape[0] - self._rand_ptr
        if left < need:
            fresh = self._rng.random(max(need, 1 << 16))
            self._rand = np.concatenate([self._rand[self._rand_ptr:], fresh])
            self._rand_ptr = 0
        if self._rec_t.shape[0] < need:
            self._rec_t = np.zeros(need)
            self._rec_i = np.zeros((need, 5), dtype=np.int64)

    def _collect_changes(self):
        n = self.cnt[K.C_NREC]
        if n:
            self.lane_change_times.append(self._rec_t[:n].copy())
            self.lane_change_rows.append(self._rec_i[:n].copy())
        self.cnt[K.C_NREC] = 0

    def _advance(self, n_steps: int):
        dt = self.params.time_step
        t_until = (self.k + n_steps) * dt
        self._route_due(t_until)
        self._ensure_buffers(n_steps, t_until)
        rand = self._rand[self._rand_ptr:]
        self.cnt[K.C_RAND] = 0
        K.simulate(self.k, n_steps, self.vf, self.vi, self.route,
                   self.e_len, self.e_vmax, self.e_nl, self.perm, self.entry,
                   self.sig_cycle, self.sig_win, self.sig_nwin,
                   self.in_ptr, self.in_list, self.origins, self.q_ptr, self.q_list, self.q_head,
                   self.lane_veh, self.lane_cnt, self.P, self.cnt, self.fcnt, rand,
                   self._rec_t, self._rec_i, self.m_cnt, self.m_spd, self.r_cnt, self.r_spd,
                   self.tmp_vs, self.tmp_cap, self.tmp_new, self.sig, self.prop,
                   self.appr_key, self.appr_d, self.appr_v, self.trans_v, self.trans_x,
                   self.blk, self.blk_tgt)
        self._rand_ptr += int(self.cnt[K.C_RAND])
        self.k += n_steps
        self._collect_changes()
        if self.cnt[K.C_OVERFLOW]:
            raise RuntimeError("internal buffer overflow in the step kernel")

    def step(self, n: int = 1):
        """Advance ``n`` steps (routing weights are not refreshed here)."""
        self._advance(n)

    def run_until(self, horizon: float):
        """Step to ``horizon`` with periodic route refreshes and measure flushes."""
        p = self.params
        dt = p.time_step
        total = int(math.ceil(horizon / dt - 1e-9))
        refresh = int(round(p.route_refresh / dt))
        interval = int(round(p.measure_interval / dt))
        while self.k < total:
            if self.k % refresh == 0 and self.k > 0:
                self._refresh_weights()
            nxt = min((self.k // refresh + 1) * refresh, (self.k // interval + 1) * interval, total)
            self._advance(nxt - self.k)
            if self.k % interval == 0 or self.k == total:
                self._flush_measures()

    # -- results -----------------------------------------------------------

    def lane_change_records(self) -> list[LaneChangeRecord]:
        if not self.lane_change_rows:
            return []
        ts = np.concatenate(self.lane_change_times)
        rows = np.concatenate(self.lane_change_rows)
        out = []
        for t, (i, e, fl, tl, reason) in zip(ts.tolist(), rows.tolist()):
            prof = self.vprofile[i]
            out.append(LaneChangeRecord(t, i, prof.vehicle_class, prof.style, self.edge_ids[e], fl, tl,
                                        LaneChangeReason(reason)))
        return out

    def trip_records(self) -> list[TripRecord]:
        out = []
        for i in range(self._n):
            st = self.vi[i, K.STATE]
            if st == K.PENDING:
                continue
            prof = self.vprofile[i]
            done = st == K.ARRIVED
            out.append(TripRecord(i, prof.vehicle_class, prof.style, float(self.vf[i, K.INS]),
                                  float(self.vf[i, K.ARR]) if done else None, bool(done)))
        return out


def run(config: ScenarioConfig) -> RunOutput:
    """Execute one scenario run."""
    _, _, s_engine = config.seeds()
    deps = config.departures()
    log.info("run seed=%d: %d departures, horizon %.0f s", config.seed, len(deps), config.horizon)
    sim = Simulation(config.network, deps, config.engine, s_engine)
    sim.run_until(config.horizon)
    counters = sim.counters
    counters["departures"] = len(deps)
    counters["interval_demand_veh_per_h"] = config.interval_demand()
    counters["av_penetration"] = config.fleet.av_penetration
    counters["seed"] = config.seed
    log.info("run seed=%d done: %s", config.seed,
             {k: counters[k] for k in ("inserted", "arrived", "removed_stuck", "lane_changes")})
    return RunOutput(sim.lane_change_records(), sim.measures, sim.trip_records(), counters)


__all__ = ["EngineParams", "LaneChangeRecord", "RunOutput", "ScenarioConfig", "Simulation",
           "TripRecord", "VehicleView", "run", "OUTPUT_FILES"]
