"""Longitudinal control and lane-change decisions.

Every vehicle uses the same Krauss-type car-following law; CVs and AVs differ
only in their :class:`LaneChangeParams`.  The scalar kernels are numba
compiled so the simulation loop calls the very same code as the public API.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import IntEnum

import numpy as np
from numba import njit

CV, AV = "CV", "AV"
VEHICLE_CLASSES = (CV, AV)
STYLES = ("conservative", "moderate", "aggressive")

VEHICLE_LENGTH = 5.0


class LaneChangeReason(IntEnum):
    NONE = 0
    STRATEGIC = 1
    COOPERATIVE = 2
    TACTICAL = 3
    REGULATORY = 4

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class CarFollowingParams:
    max_accel: float = 2.6
    max_decel: float = 4.5
    min_gap: float = 2.5
    reaction_time: float = 1.0
    imperfection: float = 0.5

    def __post_init__(self):
        for name in ("max_accel", "max_decel", "min_gap", "reaction_time"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.imperfection <= 1.0:
            raise ValueError("imperfection must lie in [0, 1]")


@dataclass(frozen=True)
class LaneChangeParams:
    lc_strategic: float = 1.0
    lc_speed_gain: float = 1.0
    lc_keep_right: float = 1.0
    lc_assertive: float = 1.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not v > 0:
                raise ValueError(f"{k} must be positive")


@dataclass(frozen=True)
class DesireConstants:
    """Free constants of the desire rules; only the multipliers are calibrated."""

    speed_gain_threshold: float = 1.0   # m/s, divided by lc_speed_gain
    keep_right_threshold: float = 1.0   # m/s, divided by lc_keep_right
    strategic_time: float = 20.0        # s
    strategic_distance: float = 100.0   # m
    lookahead: float = 100.0            # m


@dataclass(frozen=True)
class DriverProfile:
    vehicle_class: str
    style: str
    cf: CarFollowingParams = field(default_factory=CarFollowingParams)
    lc: LaneChangeParams = field(default_factory=LaneChangeParams)

    @property
    def key(self) -> str:
        return f"{self.vehicle_class}/{self.style}"


#: lcStrategic, lcSpeedGain, lcKeepRight, lcAssertive per class and style
TABLE1 = {
    CV: {"conservative": (1.0, 1.0, 1.0, 1.0),
         "moderate": (1.0, 1.0, 1.0, 1.3),
         "aggressive": (1.0, 1.0, 1.0, 1.6)},
    AV: {"conservative": (3.0, 5.0, 1.2, 0.5),
         "moderate": (3.0, 5.0, 1.2, 0.7),
         "aggressive": (3.0, 5.0, 1.2, 0.9)},
}


def table1_profiles(cf: CarFollowingParams | None = None) -> dict[tuple[str, str], DriverProfile]:
    """The built-in "table1" profile set; one shared car-following model."""
    cf = cf or CarFollowingParams()
    return {
        (cls, style): DriverProfile(cls, style, cf, LaneChangeParams(*TABLE1[cls][style]))
        for cls in VEHICLE_CLASSES
        for style in STYLES
    }


PROFILE_SETS = {"table1": table1_profiles}


# ---------------------------------------------------------------------------
# scalar kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def _safe_speed(gap, leader_speed, follower_speed, decel, tau):
    v = leader_speed + (gap - leader_speed * tau) / ((leader_speed + follower_speed) / (2.0 * decel) + tau)
    return v if v > 0.0 else 0.0


@njit(cache=True)
def _update_speed(v, v_safe, v_max, accel, sigma, dt, rand):
    v_new = min(v + accel * dt, v_safe, v_max) - sigma * accel * dt * rand
    return v_new if v_new > 0.0 else 0.0


@njit(cache=True)
def _secure_gap(follower_speed, leader_speed, decel, tau, min_gap):
    brake = (follower_speed * follower_speed - leader_speed * leader_speed) / (2.0 * decel)
    if brake < 0.0:
        brake = 0.0
    return follower_speed * tau + brake + min_gap


@njit(cache=True)
def _required_gap(follower_speed, leader_speed, decel, tau, min_gap, assertive):
    g = _secure_gap(follower_speed, leader_speed, decel, tau, min_gap) / assertive
    return g if g > min_gap else min_gap


@njit(cache=True)
def _gap_ok(ego_pos, ego_speed, has_leader, leader_pos, leader_speed,
            has_follower, follower_pos, follower_speed,
            veh_len, decel, tau, min_gap, assertive):
    if has_leader:
        g = leader_pos - veh_len - ego_pos
        if g < _required_gap(ego_speed, leader_speed, decel, tau, min_gap, assertive):
            return False
    if has_follower:
        g = ego_pos - veh_len - follower_pos
        if g < _required_gap(follower_speed, ego_speed, decel, tau, min_gap, assertive):
            return False
    return True


@njit(cache=True)
def _desire(lane, n_lanes, speed, dead_end, anticipated,
            lc_strategic, lc_speed_gain, lc_keep_right,
            gain_thr, keep_thr, strat_time, strat_dist):
    """Return (target lane, reason code); target -1 when there is no desire.

    ``dead_end[l]`` is the distance along the route at which staying on lane
    ``l`` stops leading onward (inf when it reaches the destination),
    ``anticipated[l]`` the speed expected on lane ``l``.
    """
    if n_lanes < 2:
        return -1, 0
    horizon = lc_strategic * (speed * strat_time + strat_dist)
    here = dead_end[lane]
    # strategic: the current lane runs into a dead end within the horizon
    if here < horizon:
        best = -1
        for l in range(n_lanes):
            if dead_end[l] <= here:
                continue
            if best < 0:
                best = l
                continue
            good_l = dead_end[l] >= horizon
            good_b = dead_end[best] >= horizon
            if good_l and not good_b:
                best = l
            elif good_l == good_b:
                if good_l:
                    if abs(l - lane) < abs(best - lane):
                        best = l
                elif dead_end[l] > dead_end[best]:
                    best = l
        if best >= 0:
            return (lane + 1 if best > lane else lane - 1), 1
    # discretionary targets must not dead-end sooner than the current lane
    floor = min(here, horizon)
    gain_limit = gain_thr / lc_speed_gain
    # regulatory: move right when it costs (almost) nothing; the cost must also
    # stay below the speed-gain threshold so the move is never undone at once
    if lane > 0 and dead_end[lane - 1] >= floor:
        cost = anticipated[lane] - anticipated[lane - 1]
        if cost < keep_thr / lc_keep_right and cost <= gain_limit:
            return lane - 1, 4
    # tactical: overtake for speed
    best = -1
    best_gain = gain_limit
    for l in (lane - 1, lane + 1):
        if 0 <= l < n_lanes and dead_end[l] >= floor:
            g = anticipated[l] - anticipated[lane]
            if g > best_gain:
                best = l
                best_gain = g
    if best >= 0:
        return best, 3
    return -1, 0


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

def safe_speed(gap: float, leader_speed: float, cf: CarFollowingParams,
               follower_speed: float | None = None) -> float:
    """Krauss safe speed for a net ``gap`` (beyond min_gap) to the leader.

    ``follower_speed`` defaults to ``leader_speed``.
    """
    if gap < 0:
        raise ValueError("gap must be nonnegative")
    fs = leader_speed if follower_speed is None else follower_speed
    return _safe_speed(gap, leader_speed, fs, cf.max_decel, cf.reaction_time)


def update_speed(v: float, v_safe: float, v_max: float, cf: CarFollowingParams,
                 rand: float, dt: float = 0.5) -> float:
    """One Krauss step including driver imperfection (dawdling)."""
    return _update_speed(v, v_safe, v_max, cf.max_accel, cf.imperfection, dt, rand)


def secure_gap(follower_speed: float, leader_speed: float, cf: CarFollowingParams) -> float:
    """Bumper-to-bumper spacing the follower needs if the leader brakes hard."""
    return _secure_gap(follower_speed, leader_speed, cf.max_decel, cf.reaction_time, cf.min_gap)


def required_gap(follower_speed: float, leader_speed: float, cf: CarFollowingParams,
                 lc_assertive: float) -> float:
    """Secure gap scaled by ``1/lc_assertive``, never below ``min_gap``."""
    if not lc_assertive > 0:
        raise ValueError("lc_assertive must be positive")
    return _required_gap(follower_speed, leader_speed, cf.max_decel, cf.reaction_time,
                         cf.min_gap, lc_assertive)


@dataclass
class VehicleState:
    id: int
    profile: DriverProfile
    route: tuple[str, ...]
    route_index: int
    edge: str
    lane: int
    position: float
    speed: float
    lc_in_progress: tuple[int, float, LaneChangeReason] | None = None

    @property
    def next_edge(self) -> str | None:
        i = self.route_index + 1
        return self.route[i] if i < len(self.route) else None


@dataclass(frozen=True)
class Neighbor:
    position: float
    speed: float


@dataclass
class LaneContext:
    """What the ego vehicle sees around it on its current edge.

    ``leaders[l]`` / ``followers[l]`` are the nearest vehicles ahead of and
    behind the ego position on lane ``l`` (None when absent).  ``dead_end``
    optionally gives the route distance at which each lane stops leading
    onward; by default a lane not in ``permitted`` dead-ends at
    ``dist_to_end`` and the others never do.
    """

    n_lanes: int
    speed_limit: float
    dist_to_end: float
    permitted: list[bool]
    leaders: list[Neighbor | None]
    followers: list[Neighbor | None]
    constants: DesireConstants = field(default_factory=DesireConstants)
    dead_end: list[float] | None = None

    def dead_end_distances(self) -> np.ndarray:
        if self.dead_end is not None:
            return np.asarray(self.dead_end, dtype=float)
        return np.array([np.inf if ok else self.dist_to_end for ok in self.permitted])


def anticipated_speeds(ego: VehicleState, ctx: LaneContext) -> np.ndarray:
    """Speed limit, or the leader's speed when it is within the lookahead."""
    out = np.full(ctx.n_lanes, ctx.speed_limit)
    for l, lead in enumerate(ctx.leaders):
        if lead is not None and lead.position - VEHICLE_LENGTH - ego.position <= ctx.constants.lookahead:
            out[l] = min(ctx.speed_limit, lead.speed)
    return out


def lane_change_desire(ego: VehicleState, ctx: LaneContext,
                       lc: LaneChangeParams) -> tuple[int, LaneChangeReason] | None:
    """Desired (target lane, reason), checked as strategic > regulatory > tactical.

    Cooperative changes are not an ego desire; the engine tags a strategic
    change as cooperative when a courtesy-braking follower made room for it.
    """
    c = ctx.constants
    target, reason = _desire(ego.lane, ctx.n_lanes, ego.speed, ctx.dead_end_distances(),
                             anticipated_speeds(ego, ctx),
                             lc.lc_strategic, lc.lc_speed_gain, lc.lc_keep_right,
                             c.speed_gain_threshold, c.keep_right_threshold,
                             c.strategic_time, c.strategic_distance)
    if target < 0:
        return None
    return int(target), LaneChangeReason(reason)


def gap_check(ego: VehicleState, leader: Neighbor | None, follower: Neighbor | None,
              lc: LaneChangeParams, cf: CarFollowingParams | None = None) -> bool:
    """Accept a change iff both target-lane gaps meet :func:`required_gap`.

    Missing neighbors count as infinite gaps.
    """
    cf = cf or ego.profile.cf
    return bool(_gap_ok(ego.position, ego.speed,
                        leader is not None, leader.position if leader else 0.0,
                        leader.speed if leader else 0.0,
                        follower is not None, follower.position if follower else 0.0,
                        follower.speed if follower else 0.0,
                        VEHICLE_LENGTH, cf.max_decel, cf.reaction_time, cf.min_gap,
                        lc.lc_assertive))


def braking_distance(v: float, cf: CarFollowingParams) -> float:
    return v * v / (2.0 * cf.max_decel)


__all__ = [
    "AV", "CV", "STYLES", "TABLE1", "VEHICLE_LENGTH", "CarFollowingParams", "DesireConstants",
    "DriverProfile", "LaneChangeParams", "LaneChangeReason", "LaneContext", "Neighbor",
    "VehicleState", "anticipated_speeds", "braking_distance", "gap_check", "lane_change_desire",
    "required_gap", "safe_speed", "secure_gap", "table1_profiles", "update_speed",
]
